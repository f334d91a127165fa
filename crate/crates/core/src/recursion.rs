//! Sampling engine for recursive distributional equations
//!
//! ```text
//! X_n =d Σ_{r=1}^{K} A_r^{(n)} X^{(r)}_{I_r^{(n)}} + b^{(n)},   n >= n0,
//! ```
//!
//! together with the limit map `T(μ) = Law(Σ A_r Z^{(r)} + b)` acting on
//! empirical ensembles and the accompanying (hybrid) sequence that feeds
//! limit-law inputs into finite-`n` coefficients.
//!
//! Independence is implemented through seed trees: at a node with seed `s`
//! the coefficients use `s.child(0)` and the `r`-th subproblem uses
//! `s.child(r + 1)`. Ensembles use `root.child(i)` for the `i`-th sample, so
//! results are identical for any number of worker threads.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{Ensemble, EnsembleMeta, PathSampler};
use crate::error::{Error, Result};
use crate::metric_order::MetricOrder;
use crate::operators::{CoefficientDraw, PathOperator};
use crate::path::{affine_combine, Path, PathKind};
use crate::seed::{Seed, SimRng};

/// Draws rejected because some index equalled `n` before giving up.
pub const MAX_REJECTIONS: usize = 100;

/// Draws `(A^{(n)}, b^{(n)}, I^{(n)})` for a given size.
pub trait CoefficientSampler: Send + Sync {
    fn draw(&self, n: usize, rng: &mut SimRng) -> CoefficientDraw;

    /// `true` when `draw` ignores the generator.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Subproblem sizes as a function of `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IndexRule {
    /// `(⌈n/2⌉, ⌊n/2⌋)`, needs `K = 2`.
    Halves,
    /// `n - offset` for every branch.
    Minus { offset: usize },
    /// The same fixed size for every branch.
    Fixed { index: usize },
    /// `I_1` uniform on `{0, …, n-1}` and `I_2 = n - 1 - I_1`, needs `K = 2`.
    UniformSplit,
}

/// Fixed operators and shift with sizes from an [`IndexRule`].
#[derive(Clone, Debug)]
pub struct RuleSampler {
    pub operators: Vec<PathOperator>,
    pub shift: Option<Path>,
    pub rule: IndexRule,
}

impl CoefficientSampler for RuleSampler {
    fn draw(&self, n: usize, rng: &mut SimRng) -> CoefficientDraw {
        let k = self.operators.len();
        let indices = match self.rule {
            IndexRule::Halves => vec![n.div_ceil(2), n / 2],
            IndexRule::Minus { offset } => vec![n.saturating_sub(offset); k],
            IndexRule::Fixed { index } => vec![index; k],
            IndexRule::UniformSplit => {
                let i = if n == 0 { 0 } else { rng.random_range(0..n) };
                vec![i, n.saturating_sub(1 + i)]
            }
        };
        CoefficientDraw {
            operators: self.operators.clone(),
            shift: self.shift.clone(),
            indices,
        }
    }

    fn is_deterministic(&self) -> bool {
        !matches!(self.rule, IndexRule::UniformSplit)
    }
}

/// Full description of a recursive equation.
#[derive(Clone)]
pub struct RecursionSpec {
    k: usize,
    n0: usize,
    kind: PathKind,
    base: Vec<Arc<dyn PathSampler>>,
    sampler: Arc<dyn CoefficientSampler>,
    description: serde_json::Value,
}

impl std::fmt::Debug for RecursionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecursionSpec")
            .field("k", &self.k)
            .field("n0", &self.n0)
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

impl RecursionSpec {
    /// `base[i]` is the law of `X_i` for `i < n0`. `description` is any JSON
    /// value identifying the spec; its canonical form feeds [`Self::digest`].
    pub fn new(
        k: usize,
        n0: usize,
        base: Vec<Arc<dyn PathSampler>>,
        sampler: Arc<dyn CoefficientSampler>,
        description: serde_json::Value,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if n0 == 0 {
            return Err(Error::Config("n0 must be at least 1".into()));
        }
        if base.len() != n0 {
            return Err(Error::Config(format!(
                "need {n0} base laws (sizes 0..{n0}), got {}",
                base.len()
            )));
        }
        let kind = base[0].kind();
        if base.iter().any(|b| b.kind() != kind) {
            return Err(Error::MixedKinds);
        }
        Ok(RecursionSpec {
            k,
            n0,
            kind,
            base,
            sampler,
            description,
        })
    }

    pub fn branching(&self) -> usize {
        self.k
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn description(&self) -> &serde_json::Value {
        &self.description
    }

    /// SHA-256 of the canonical (key-sorted, compact) description.
    pub fn digest(&self) -> String {
        canonical_digest(&self.description)
    }

    pub fn base_sampler(&self, n: usize) -> Option<&dyn PathSampler> {
        self.base.get(n).map(|b| b.as_ref())
    }

    pub fn sampler(&self) -> &dyn CoefficientSampler {
        self.sampler.as_ref()
    }

    /// Draws coefficients at `n`, redrawing while some index equals `n`.
    /// Returns the draw and the number of rejected draws.
    pub fn draw_proper(&self, n: usize, rng: &mut SimRng) -> Result<(CoefficientDraw, usize)> {
        for rejections in 0..=MAX_REJECTIONS {
            let draw = self.sampler.draw(n, rng);
            if draw.operators.len() != self.k || draw.indices.len() != self.k {
                return Err(Error::Config(format!(
                    "sampler returned {} operators / {} indices for K = {}",
                    draw.operators.len(),
                    draw.indices.len(),
                    self.k
                )));
            }
            if let Some(&index) = draw.indices.iter().find(|&&i| i > n) {
                return Err(Error::InvalidIndex { n, index });
            }
            if draw.shift.as_ref().is_some_and(|s| s.kind() != self.kind) {
                return Err(Error::MixedKinds);
            }
            if draw.indices.iter().all(|&i| i < n) {
                return Ok((draw, rejections));
            }
        }
        Err(Error::ImproperSampler {
            n,
            rejections: MAX_REJECTIONS + 1,
        })
    }
}

/// Key-sorted compact JSON digest.
pub fn canonical_digest(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key, so re-serializing sorts.
    let canonical: serde_json::Value =
        serde_json::from_str(&value.to_string()).expect("valid json round-trips");
    let bytes = serde_json::to_vec(&canonical).expect("serializable");
    hex(&Sha256::digest(bytes))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Overrides the default depth bound `⌈10 log2(n + 2)⌉`.
    pub max_depth: Option<usize>,
}

/// Bookkeeping of one or more recursive samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Coefficient draws discarded because an index equalled `n`. Nonzero
    /// values mean the sampled law differs from the equation's law.
    pub rejections: usize,
    pub max_depth: usize,
}

impl SampleStats {
    fn merge(self, other: SampleStats) -> SampleStats {
        SampleStats {
            rejections: self.rejections + other.rejections,
            max_depth: self.max_depth.max(other.max_depth),
        }
    }
}

pub fn default_depth_bound(n: usize) -> usize {
    (10.0 * ((n + 2) as f64).log2()).ceil() as usize
}

/// One draw of `X_n`.
pub fn sample_process(spec: &RecursionSpec, n: usize, seed: Seed) -> Result<Path> {
    sample_process_with(spec, n, seed, SampleOptions::default()).map(|(p, _)| p)
}

pub fn sample_process_with(
    spec: &RecursionSpec,
    n: usize,
    seed: Seed,
    options: SampleOptions,
) -> Result<(Path, SampleStats)> {
    let bound = options.max_depth.unwrap_or_else(|| default_depth_bound(n));
    let mut stats = SampleStats::default();
    let path = expand(spec, n, seed, 0, bound, &mut stats)?;
    Ok((path, stats))
}

fn expand(
    spec: &RecursionSpec,
    n: usize,
    seed: Seed,
    depth: usize,
    bound: usize,
    stats: &mut SampleStats,
) -> Result<Path> {
    stats.max_depth = stats.max_depth.max(depth);
    if n < spec.n0 {
        return Ok(spec.base[n].sample(&mut seed.rng()));
    }
    if depth >= bound {
        return Err(Error::Divergence { n, depth, bound });
    }
    let (draw, rejected) = spec.draw_proper(n, &mut seed.child(0).rng())?;
    stats.rejections += rejected;
    let mut images = Vec::with_capacity(spec.k);
    for (r, (op, &index)) in draw.operators.iter().zip(&draw.indices).enumerate() {
        let sub = expand(spec, index, seed.child(r as u64 + 1), depth + 1, bound, stats)?;
        images.push(op.apply(&sub));
    }
    assemble(images, draw.shift.as_ref())
}

fn assemble(images: Vec<Path>, shift: Option<&Path>) -> Result<Path> {
    if images.len() == 1 && shift.is_none() {
        return Ok(images.into_iter().next().expect("one image"));
    }
    let refs: Vec<&Path> = images.iter().collect();
    affine_combine(&vec![1.0; refs.len()], &refs, shift)
}

/// `m` independent draws of `X_n`; sample `i` uses `seed.child(i)`.
pub fn sample_ensemble(
    spec: &RecursionSpec,
    n: usize,
    m: usize,
    seed: Seed,
    options: SampleOptions,
) -> Result<(Ensemble, SampleStats)> {
    let draws: Vec<(Path, SampleStats)> = (0..m)
        .into_par_iter()
        .map(|i| sample_process_with(spec, n, seed.child(i as u64), options))
        .collect::<Result<_>>()?;
    let stats = draws
        .iter()
        .fold(SampleStats::default(), |acc, (_, s)| acc.merge(*s));
    let samples = draws.into_iter().map(|(p, _)| p).collect();
    let ens = Ensemble::new(
        samples,
        EnsembleMeta {
            label: format!("X_{n}"),
            seed: Some(seed.value()),
            spec_digest: Some(spec.digest()),
        },
    )?;
    Ok((ens, stats))
}

/// Draws `(A_1, …, A_K, b)` of the limit equation.
pub trait LimitSampler: Send + Sync {
    fn draw(&self, rng: &mut SimRng) -> (Vec<PathOperator>, Option<Path>);
}

#[derive(Clone)]
pub enum LimitCoefficients {
    Fixed {
        operators: Vec<PathOperator>,
        shift: Option<Path>,
    },
    Random(Arc<dyn LimitSampler>),
}

/// The limit map `T`.
#[derive(Clone)]
pub struct FixedPointMap {
    k: usize,
    coefficients: LimitCoefficients,
    description: serde_json::Value,
}

impl std::fmt::Debug for FixedPointMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FixedPointMap")
            .field("k", &self.k)
            .field("description", &self.description)
            .finish()
    }
}

impl FixedPointMap {
    pub fn deterministic(
        operators: Vec<PathOperator>,
        shift: Option<Path>,
        description: serde_json::Value,
    ) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::Config("K must be at least 1".into()));
        }
        for op in &operators {
            op.validate()?;
        }
        Ok(FixedPointMap {
            k: operators.len(),
            coefficients: LimitCoefficients::Fixed { operators, shift },
            description,
        })
    }

    pub fn random(k: usize, sampler: Arc<dyn LimitSampler>, description: serde_json::Value) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(FixedPointMap {
            k,
            coefficients: LimitCoefficients::Random(sampler),
            description,
        })
    }

    pub fn branching(&self) -> usize {
        self.k
    }

    pub fn description(&self) -> &serde_json::Value {
        &self.description
    }

    pub fn coefficients(&self) -> &LimitCoefficients {
        &self.coefficients
    }

    fn draw(&self, rng: &mut SimRng) -> (Vec<PathOperator>, Option<Path>) {
        match &self.coefficients {
            LimitCoefficients::Fixed { operators, shift } => (operators.clone(), shift.clone()),
            LimitCoefficients::Random(s) => s.draw(rng),
        }
    }

    /// One draw of `Σ A_r Z^{(r)} + b` with `Z^{(r)}` taken from `inputs`.
    pub fn apply_once(&self, inputs: &dyn PathSampler, seed: Seed) -> Result<Path> {
        let (operators, shift) = self.draw(&mut seed.child(0).rng());
        if operators.len() != self.k {
            return Err(Error::Config(format!(
                "limit sampler returned {} operators for K = {}",
                operators.len(),
                self.k
            )));
        }
        let images = operators
            .iter()
            .enumerate()
            .map(|(r, op)| op.apply(&inputs.sample(&mut seed.child(r as u64 + 1).rng())))
            .collect();
        assemble(images, shift.as_ref())
    }
}

/// Empirical application of `T`: `out_size` independent draws of
/// `Σ A_r Z^{(r)} + b` with the `Z^{(r)}` resampled with replacement from
/// `ensemble`, independently across branches and outputs.
pub fn iterate_t(map: &FixedPointMap, ensemble: &Ensemble, out_size: usize, seed: Seed) -> Result<Ensemble> {
    if out_size == 0 {
        return Err(Error::Empty("iterate_t output size"));
    }
    let samples: Vec<Path> = (0..out_size)
        .into_par_iter()
        .map(|i| map.apply_once(ensemble, seed.child(i as u64)))
        .collect::<Result<_>>()?;
    Ensemble::new(
        samples,
        EnsembleMeta {
            label: format!("T({})", ensemble.meta().label),
            seed: Some(seed.value()),
            spec_digest: ensemble.meta().spec_digest.clone(),
        },
    )
}

/// One draw of the accompanying sequence at `n`: finite-`n` coefficients,
/// base laws for sizes below `n0` and draws from `fixed` otherwise.
pub fn accompanying_sample(
    spec: &RecursionSpec,
    fixed: &dyn PathSampler,
    n: usize,
    seed: Seed,
) -> Result<Path> {
    if n < spec.n0 {
        return Err(Error::domain(format!(
            "accompanying sequence starts at n0 = {}, got n = {n}",
            spec.n0
        )));
    }
    if fixed.kind() != spec.kind {
        return Err(Error::MixedKinds);
    }
    let (draw, _) = spec.draw_proper(n, &mut seed.child(0).rng())?;
    let images = draw
        .operators
        .iter()
        .zip(&draw.indices)
        .enumerate()
        .map(|(r, (op, &index))| {
            let mut rng = seed.child(r as u64 + 1).rng();
            let input = if index < spec.n0 {
                spec.base[index].sample(&mut rng)
            } else {
                fixed.sample(&mut rng)
            };
            op.apply(&input)
        })
        .collect();
    assemble(images, draw.shift.as_ref())
}

pub fn accompanying_ensemble(
    spec: &RecursionSpec,
    fixed: &dyn PathSampler,
    n: usize,
    m: usize,
    seed: Seed,
) -> Result<Ensemble> {
    let samples: Vec<Path> = (0..m)
        .into_par_iter()
        .map(|i| accompanying_sample(spec, fixed, n, seed.child(i as u64)))
        .collect::<Result<_>>()?;
    Ensemble::new(
        samples,
        EnsembleMeta {
            label: format!("Q_{n}"),
            seed: Some(seed.value()),
            spec_digest: Some(spec.digest()),
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub s: MetricOrder,
    /// Monte Carlo estimate of `Σ E ‖A_r‖^s`.
    pub l_hat: f64,
    pub l_exact: Option<f64>,
    pub stderr: f64,
    /// Rate-condition constant at the largest inspected size, when computed.
    pub lstar_hat: Option<f64>,
    /// `false` when some operator norm is only an upper bound.
    pub norms_exact: bool,
    pub mc_samples: usize,
}

/// `L = Σ_r E ‖A_r‖_op^s` for the limit map.
pub fn contraction_constant(
    map: &FixedPointMap,
    s: MetricOrder,
    mc_samples: usize,
    seed: Seed,
) -> Result<ContractionReport> {
    if mc_samples == 0 {
        return Err(Error::Empty("contraction_constant needs mc_samples >= 1"));
    }
    let term = |ops: &[PathOperator]| -> (f64, bool) {
        ops.iter().fold((0.0, true), |(sum, exact), op| {
            let n = op.norm();
            (sum + n.value.powf(s.s()), exact && n.exact)
        })
    };
    match &map.coefficients {
        LimitCoefficients::Fixed { operators, .. } => {
            let (l, exact) = term(operators);
            Ok(ContractionReport {
                s,
                l_hat: l,
                l_exact: Some(l),
                stderr: 0.0,
                lstar_hat: None,
                norms_exact: exact,
                mc_samples,
            })
        }
        LimitCoefficients::Random(sampler) => {
            let draws: Vec<(f64, bool)> = (0..mc_samples)
                .into_par_iter()
                .map(|i| term(&sampler.draw(&mut seed.child(i as u64).rng()).0))
                .collect();
            let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
            let (mean, stderr) = mean_and_stderr(&values);
            Ok(ContractionReport {
                s,
                l_hat: mean,
                l_exact: None,
                stderr,
                lstar_hat: None,
                norms_exact: draws.iter().all(|d| d.1),
                mc_samples,
            })
        }
    }
}

/// Rate sequence `R(n)` of the rate condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RateFunction {
    /// `R(n) = n^{-delta}`.
    Power { delta: f64 },
    /// `R(n) = log(n + 1)^{-k}`.
    LogPower { k: f64 },
}

impl RateFunction {
    /// Sizes below 1 are evaluated at 1 so that `R` stays finite.
    pub fn eval(self, n: usize) -> f64 {
        let n = n.max(1) as f64;
        match self {
            RateFunction::Power { delta } => n.powf(-delta),
            RateFunction::LogPower { k } => (n + 1.0).ln().powf(-k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
    pub rejections: usize,
    pub norms_exact: bool,
}

/// Monte Carlo estimate of `E Σ_r ‖A_r^{(n)}‖^s R(I_r^{(n)}) / R(n)`.
pub fn rate_factor(
    spec: &RecursionSpec,
    s: MetricOrder,
    rate: RateFunction,
    n: usize,
    mc_samples: usize,
    seed: Seed,
) -> Result<RateEstimate> {
    if n < spec.n0 {
        return Err(Error::domain(format!("rate factor needs n >= n0 = {}", spec.n0)));
    }
    let samples = if spec.sampler.is_deterministic() { 1 } else { mc_samples.max(1) };
    let rn = rate.eval(n);
    let draws: Vec<(f64, usize, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (draw, rejected) = spec.draw_proper(n, &mut seed.child(i as u64).rng())?;
            let mut exact = true;
            let mut total = 0.0;
            for (op, &index) in draw.operators.iter().zip(&draw.indices) {
                let norm = op.norm();
                exact &= norm.exact;
                total += norm.value.powf(s.s()) * rate.eval(index) / rn;
            }
            Ok((total, rejected, exact))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let (value, stderr) = mean_and_stderr(&values);
    Ok(RateEstimate {
        n,
        value,
        stderr,
        rejections: draws.iter().map(|d| d.1).sum(),
        norms_exact: draws.iter().all(|d| d.2),
    })
}

/// Rate factors over increasing sizes; the last row stands in for the
/// limsup (no extrapolation).
pub fn rate_trend(
    spec: &RecursionSpec,
    s: MetricOrder,
    rate: RateFunction,
    sizes: &[usize],
    mc_samples: usize,
    seed: Seed,
) -> Result<(Vec<RateEstimate>, Option<f64>)> {
    let rows = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| rate_factor(spec, s, rate, n, mc_samples, seed.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let lstar = rows.last().map(|r| r.value);
    Ok((rows, lstar))
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
