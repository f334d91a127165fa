//! Distance estimators between ensembles.
//!
//! Every estimator works on empirical measures. Path-space distances use the
//! sup norm; finite-dimensional distances use the Euclidean norm on the
//! projection to a time grid. Values are minimal `ℓ_p` distances
//! `(min_σ (1/m) Σ c(x_i, y_σ(i))^p)^{(1/p) ∧ 1}`, computed exactly by sorting
//! in one dimension and by optimal assignment otherwise.

pub mod assignment;
pub mod bootstrap;
pub mod ks;
mod moments;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use moments::{
    moment_match, moment_match_samples, sup_functional_moments, MomentMatchOptions, MomentMatchReport,
    SupMomentAccumulator, SupMoments, Verdict,
};

use crate::ensemble::{check_times, Ensemble};
use crate::error::{Error, Result};
use crate::metric_order::MetricOrder;
use crate::path::NeumaierSum;
use crate::seed::Seed;
use assignment::CostMatrix;

/// Largest size solved as a single assignment problem.
pub const ASSIGNMENT_CAP: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[serde(rename = "exact_1d")]
    Exact1d,
    Assignment,
    PerMarginalBound,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Exact1d => "exact_1d",
            Estimator::Assignment => "assignment",
            Estimator::PerMarginalBound => "per_marginal_bound",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AssignmentMode {
    /// One assignment over all `m` pairs; sizes above the cap are refused.
    Exact,
    /// Mean over consecutive blocks of about `block` samples each. Biased
    /// upward relative to the full assignment.
    Chunked { block: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub mode: AssignmentMode,
    /// Bootstrap resamples for the standard error; 0 disables.
    pub bootstrap: usize,
    pub seed: Seed,
    pub cap: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            mode: AssignmentMode::Exact,
            bootstrap: 0,
            seed: Seed(0),
            cap: ASSIGNMENT_CAP,
        }
    }
}

impl DistanceOptions {
    pub fn chunked(block: usize) -> Self {
        DistanceOptions {
            mode: AssignmentMode::Chunked { block },
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StderrMethod {
    Bootstrap,
    BetweenBlocks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunking {
    pub block_size: usize,
    pub blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    pub estimator: Estimator,
    pub p_or_s: f64,
    pub grid: Option<Vec<f64>>,
    pub sizes: (usize, usize),
    pub stderr: Option<f64>,
    pub stderr_method: Option<StderrMethod>,
    pub resamples: usize,
    /// Present when the value is a block average.
    pub chunking: Option<Chunking>,
}

impl DistanceReport {
    pub fn row(&self, n: usize, seed: u64) -> SweepRow {
        SweepRow {
            n,
            estimator: self.estimator.name().to_string(),
            value: self.value,
            stderr: self.stderr,
            seed,
        }
    }
}

/// One line of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub estimator: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
}

pub const SWEEP_HEADER: &str = "n,estimator,value,stderr,seed";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let stderr = self.stderr.map(|s| format!("{s:e}")).unwrap_or_default();
        format!("{},{},{:e},{},{}", self.n, self.estimator, self.value, stderr, self.seed)
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Values of `m` processes at `k` times, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FddSample {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl FddSample {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_times(&times)?;
        if values.is_empty() || !values.len().is_multiple_of(times.len()) {
            return Err(Error::Dimension(format!(
                "{} values do not fill rows of length {}",
                values.len(),
                times.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fdd sample".into()));
        }
        Ok(FddSample { times, values })
    }

    pub fn from_ensemble(ens: &Ensemble, times: &[f64]) -> Result<Self> {
        Ok(FddSample {
            times: times.to_vec(),
            values: ens.project(times)?,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.times.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.values[i * k..(i + 1) * k]
    }

    /// Values at the `j`-th time.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i)[j]).collect()
    }
}

fn check_p(p: f64, min: f64) -> Result<()> {
    if !(p.is_finite() && p >= min && p > 0.0) {
        return Err(Error::domain(format!("order p = {p} must be finite and at least {min}")));
    }
    Ok(())
}

fn check_sizes(a: usize, b: usize) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::Empty("distance input"));
    }
    if a != b {
        return Err(Error::SizeMismatch { left: a, right: b });
    }
    Ok(())
}

/// Exact empirical `ℓ_p` on the line by sorted pairing.
pub fn wasserstein_1d(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_sizes(a.len(), b.len())?;
    check_p(p, 1.0)?;
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("wasserstein_1d input".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total = NeumaierSum::sum(a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)));
    Ok((total / a.len() as f64).powf(1.0 / p))
}

fn finish(mean_cost: f64, p: f64) -> f64 {
    mean_cost.max(0.0).powf((1.0 / p).min(1.0))
}

/// Optimal-assignment value for `dist(i, j)^p` over index sets.
fn assignment_value(ia: &[usize], ib: &[usize], p: f64, dist: &(dyn Fn(usize, usize) -> f64 + Sync)) -> f64 {
    let cost = CostMatrix::from_fn(ia.len(), |i, j| dist(ia[i], ib[j]).powf(p));
    finish(assignment::solve(&cost).cost / ia.len() as f64, p)
}

fn block_bounds(m: usize, block: usize) -> Vec<(usize, usize)> {
    let blocks = m.div_ceil(block).max(1);
    (0..blocks).map(|b| (b * m / blocks, (b + 1) * m / blocks)).collect()
}

fn assignment_report(
    m: usize,
    p: f64,
    opts: &DistanceOptions,
    dist: &(dyn Fn(usize, usize) -> f64 + Sync),
) -> Result<DistanceReport> {
    let mut report = DistanceReport {
        value: 0.0,
        estimator: Estimator::Assignment,
        p_or_s: p,
        grid: None,
        sizes: (m, m),
        stderr: None,
        stderr_method: None,
        resamples: 0,
        chunking: None,
    };
    match opts.mode {
        AssignmentMode::Exact => {
            if m > opts.cap {
                return Err(Error::CapExceeded { size: m, cap: opts.cap });
            }
            let all: Vec<usize> = (0..m).collect();
            report.value = assignment_value(&all, &all, p, dist);
            if opts.bootstrap > 0 {
                let se = bootstrap::bootstrap_se(m, m, opts.bootstrap, opts.seed, |ia, ib| {
                    Ok(assignment_value(ia, ib, p, dist))
                })?;
                report.stderr = Some(se);
                report.stderr_method = Some(StderrMethod::Bootstrap);
                report.resamples = opts.bootstrap;
            }
        }
        AssignmentMode::Chunked { block } => {
            if block == 0 || block > opts.cap {
                return Err(Error::Config(format!("block size {block} must lie in 1..={}", opts.cap)));
            }
            let bounds = block_bounds(m, block);
            let values: Vec<f64> = bounds
                .par_iter()
                .map(|&(lo, hi)| {
                    let idx: Vec<usize> = (lo..hi).collect();
                    assignment_value(&idx, &idx, p, dist)
                })
                .collect();
            report.value = values.iter().sum::<f64>() / values.len() as f64;
            if values.len() > 1 {
                report.stderr = Some(bootstrap::std_dev(&values) / (values.len() as f64).sqrt());
                report.stderr_method = Some(StderrMethod::BetweenBlocks);
            }
            report.chunking = Some(Chunking {
                block_size: bounds[0].1 - bounds[0].0,
                blocks: bounds.len(),
            });
        }
    }
    Ok(report)
}

/// Empirical minimal `ℓ_p` in path space with the sup norm. Orders `p < 1`
/// use the exponent `(1/p) ∧ 1 = 1`.
pub fn path_lp_distance(a: &Ensemble, b: &Ensemble, p: f64, opts: &DistanceOptions) -> Result<DistanceReport> {
    check_sizes(a.len(), b.len())?;
    check_p(p, 0.0)?;
    if a.kind() != b.kind() {
        return Err(Error::MixedKinds);
    }
    let (xs, ys) = (a.samples(), b.samples());
    assignment_report(a.len(), p, opts, &|i, j| xs[i].sup_distance(&ys[j]))
}

/// Empirical `p`-Wasserstein between grid projections (Euclidean norm).
pub fn fdd_distance(a: &Ensemble, b: &Ensemble, times: &[f64], p: f64, opts: &DistanceOptions) -> Result<DistanceReport> {
    check_sizes(a.len(), b.len())?;
    fdd_distance_samples(&FddSample::from_ensemble(a, times)?, &FddSample::from_ensemble(b, times)?, p, opts)
}

pub fn fdd_distance_samples(a: &FddSample, b: &FddSample, p: f64, opts: &DistanceOptions) -> Result<DistanceReport> {
    check_sizes(a.len(), b.len())?;
    check_p(p, 1.0)?;
    if a.times() != b.times() {
        return Err(Error::Dimension("fdd samples use different grids".into()));
    }
    let m = a.len();
    let mut report = if a.dim() == 1 {
        let (va, vb) = (a.values(), b.values());
        let mut r = DistanceReport {
            value: wasserstein_1d(va, vb, p)?,
            estimator: Estimator::Exact1d,
            p_or_s: p,
            grid: None,
            sizes: (m, m),
            stderr: None,
            stderr_method: None,
            resamples: 0,
            chunking: None,
        };
        if opts.bootstrap > 0 {
            let se = bootstrap::bootstrap_se(m, m, opts.bootstrap, opts.seed, |ia, ib| {
                let ra: Vec<f64> = ia.iter().map(|&i| va[i]).collect();
                let rb: Vec<f64> = ib.iter().map(|&i| vb[i]).collect();
                wasserstein_1d(&ra, &rb, p)
            })?;
            r.stderr = Some(se);
            r.stderr_method = Some(StderrMethod::Bootstrap);
            r.resamples = opts.bootstrap;
        }
        r
    } else {
        assignment_report(m, p, opts, &|i, j| euclidean(a.row(i), b.row(j)))?
    };
    report.grid = Some(a.times().to_vec());
    Ok(report)
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Lower bound on the joint `ℓ_p` from exact marginal distances:
/// `(Σ_j W_p(a_j, b_j)^p)^{1/p}` for `p ≥ 2`, `max_j W_p(a_j, b_j)` otherwise.
pub fn per_marginal_bound(a: &FddSample, b: &FddSample, p: f64) -> Result<DistanceReport> {
    check_sizes(a.len(), b.len())?;
    check_p(p, 1.0)?;
    if a.times() != b.times() {
        return Err(Error::Dimension("fdd samples use different grids".into()));
    }
    let marginals = (0..a.dim())
        .map(|j| wasserstein_1d(&a.marginal(j), &b.marginal(j), p))
        .collect::<Result<Vec<_>>>()?;
    let value = if p >= 2.0 {
        marginals.iter().map(|w| w.powf(p)).sum::<f64>().powf(1.0 / p)
    } else {
        marginals.iter().copied().fold(0.0, f64::max)
    };
    Ok(DistanceReport {
        value,
        estimator: Estimator::PerMarginalBound,
        p_or_s: p,
        grid: Some(a.times().to_vec()),
        sizes: (a.len(), b.len()),
        stderr: None,
        stderr_method: None,
        resamples: 0,
        chunking: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaBound {
    /// Upper bound on `ζ_s` between the two empirical measures.
    pub value: f64,
    pub s: MetricOrder,
    pub ell_s: DistanceReport,
    /// Empirical `E‖X‖^s` and `E‖Y‖^s`.
    pub moments: (f64, f64),
}

/// `(E‖X‖^s^{1-1/s} + E‖Y‖^s^{1-1/s}) ℓ_s(X, Y)` for `s > 1` and `ℓ_s` for
/// `s ≤ 1`, with empirical moments and the empirical `ℓ_s`.
pub fn zeta_upper_bound(a: &Ensemble, b: &Ensemble, s: MetricOrder, opts: &DistanceOptions) -> Result<ZetaBound> {
    let ell = path_lp_distance(a, b, s.s(), opts)?;
    let moment = |e: &Ensemble| e.samples().iter().map(|p| p.sup_norm().powf(s.s())).sum::<f64>() / e.len() as f64;
    let (ma, mb) = (moment(a), moment(b));
    if !(ma.is_finite() && mb.is_finite()) {
        return Err(Error::NonFinite("sup-norm moment".into()));
    }
    let value = zeta_from_parts(s, ma, mb, ell.value);
    Ok(ZetaBound {
        value,
        s,
        ell_s: ell,
        moments: (ma, mb),
    })
}

pub fn zeta_from_parts(s: MetricOrder, moment_a: f64, moment_b: f64, ell_s: f64) -> f64 {
    if s.s() <= 1.0 {
        return ell_s;
    }
    let e = 1.0 - 1.0 / s.s();
    (moment_a.powf(e) + moment_b.powf(e)) * ell_s
}
