use serde::{Deserialize, Serialize};

use super::FddSample;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::metric_order::MetricOrder;
use crate::path::{NeumaierSum, Path};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The condition is not needed at this order `s`.
    NotRequired,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMatchOptions {
    /// Width of the acceptance band in standard errors.
    pub se_multiplier: f64,
    /// Absolute slack added to every band.
    pub abs_tol: f64,
}

impl Default for MomentMatchOptions {
    fn default() -> Self {
        MomentMatchOptions {
            se_multiplier: 3.0,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMatchReport {
    pub s: MetricOrder,
    pub times: Vec<f64>,
    pub sizes: (usize, usize),
    pub se_multiplier: f64,
    pub max_mean_gap: f64,
    pub max_cov_gap: f64,
    /// Largest gap in units of its standard error.
    pub max_mean_z: f64,
    pub max_cov_z: f64,
    /// Empirical `E‖·‖_∞^s` of each ensemble.
    pub sup_moment_s: (f64, f64),
    pub mean_violations: usize,
    pub cov_violations: usize,
    pub finiteness: Verdict,
    pub mean: Verdict,
    pub covariance: Verdict,
}

/// Empirical checks of the three moment conditions under which `ζ_s` is
/// finite: finite `s`-th sup moments, equal means on the grid when `s > 1`,
/// equal covariances on grid pairs when `s > 2`.
pub fn moment_match(
    a: &Ensemble,
    b: &Ensemble,
    s: MetricOrder,
    times: &[f64],
    opts: &MomentMatchOptions,
) -> Result<MomentMatchReport> {
    let moment = |e: &Ensemble| {
        NeumaierSum::sum(e.samples().iter().map(|p| p.sup_norm().powf(s.s()))) / e.len() as f64
    };
    moment_match_samples(
        &FddSample::from_ensemble(a, times)?,
        &FddSample::from_ensemble(b, times)?,
        (moment(a), moment(b)),
        s,
        opts,
    )
}

struct Summary {
    mean: Vec<f64>,
    mean_var: Vec<f64>,
    cov: Vec<f64>,
    cov_var: Vec<f64>,
}

fn summarize(x: &FddSample) -> Summary {
    let (m, k) = (x.len(), x.dim());
    let mf = m as f64;
    let mut mean = vec![0.0; k];
    for i in 0..m {
        for (acc, v) in mean.iter_mut().zip(x.row(i)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= mf);
    let pairs = k * (k + 1) / 2;
    let mut sum = vec![0.0; pairs];
    let mut sum_sq = vec![0.0; pairs];
    let mut var = vec![0.0; k];
    let mut centered = vec![0.0; k];
    for i in 0..m {
        for ((c, v), mu) in centered.iter_mut().zip(x.row(i)).zip(&mean) {
            *c = v - mu;
        }
        let mut idx = 0;
        for j in 0..k {
            var[j] += centered[j] * centered[j];
            for l in j..k {
                let z = centered[j] * centered[l];
                sum[idx] += z;
                sum_sq[idx] += z * z;
                idx += 1;
            }
        }
    }
    let mean_var = var.iter().map(|v| v / (mf - 1.0) / mf).collect();
    let cov = sum.iter().map(|s| s / (mf - 1.0)).collect();
    let cov_var = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, sq)| {
            let mz = s / mf;
            ((sq / mf - mz * mz).max(0.0) * mf / (mf - 1.0)) / mf
        })
        .collect();
    Summary {
        mean,
        mean_var,
        cov,
        cov_var,
    }
}

/// As [`moment_match`] on grid projections with precomputed sup moments.
pub fn moment_match_samples(
    a: &FddSample,
    b: &FddSample,
    sup_moment_s: (f64, f64),
    s: MetricOrder,
    opts: &MomentMatchOptions,
) -> Result<MomentMatchReport> {
    if a.times() != b.times() {
        return Err(Error::Dimension("moment match needs a common grid".into()));
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Empty("moment match needs at least two samples per ensemble"));
    }
    let (sa, sb) = (summarize(a), summarize(b));
    let band = |gap: f64, var: f64| -> (bool, f64) {
        let se = var.sqrt();
        let z = if gap == 0.0 { 0.0 } else { gap / se };
        (gap <= opts.se_multiplier * se + opts.abs_tol, z)
    };
    let mut report = MomentMatchReport {
        s,
        times: a.times().to_vec(),
        sizes: (a.len(), b.len()),
        se_multiplier: opts.se_multiplier,
        max_mean_gap: 0.0,
        max_cov_gap: 0.0,
        max_mean_z: 0.0,
        max_cov_z: 0.0,
        sup_moment_s,
        mean_violations: 0,
        cov_violations: 0,
        finiteness: Verdict::from_bool(sup_moment_s.0.is_finite() && sup_moment_s.1.is_finite()),
        mean: Verdict::NotRequired,
        covariance: Verdict::NotRequired,
    };
    for j in 0..a.dim() {
        let gap = (sa.mean[j] - sb.mean[j]).abs();
        let (ok, z) = band(gap, sa.mean_var[j] + sb.mean_var[j]);
        report.max_mean_gap = report.max_mean_gap.max(gap);
        report.max_mean_z = report.max_mean_z.max(z);
        report.mean_violations += usize::from(!ok);
    }
    for idx in 0..sa.cov.len() {
        let gap = (sa.cov[idx] - sb.cov[idx]).abs();
        let (ok, z) = band(gap, sa.cov_var[idx] + sb.cov_var[idx]);
        report.max_cov_gap = report.max_cov_gap.max(gap);
        report.max_cov_z = report.max_cov_z.max(z);
        report.cov_violations += usize::from(!ok);
    }
    if s.s() > 1.0 {
        report.mean = Verdict::from_bool(report.mean_violations == 0);
    }
    if s.s() > 2.0 {
        report.covariance = Verdict::from_bool(report.cov_violations == 0);
    }
    Ok(report)
}

/// Empirical moments of `‖X‖_∞` and of the one-sided maximum `(max_t X_t)^+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupMoments {
    pub orders: Vec<f64>,
    pub count: usize,
    pub sup_norm: Vec<f64>,
    pub sup_norm_se: Vec<f64>,
    pub one_sided_max: Vec<f64>,
    pub one_sided_max_se: Vec<f64>,
}

/// Streaming version of [`sup_functional_moments`] for ensembles too large
/// to hold in memory.
#[derive(Clone, Debug)]
pub struct SupMomentAccumulator {
    orders: Vec<f64>,
    count: usize,
    sup: Vec<[NeumaierSum; 2]>,
    max: Vec<[NeumaierSum; 2]>,
}

impl SupMomentAccumulator {
    pub fn new(orders: &[f64]) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::Empty("moment orders"));
        }
        if let Some(q) = orders.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
            return Err(Error::domain(format!("moment order {q} must be positive")));
        }
        Ok(SupMomentAccumulator {
            orders: orders.to_vec(),
            count: 0,
            sup: vec![[NeumaierSum::default(); 2]; orders.len()],
            max: vec![[NeumaierSum::default(); 2]; orders.len()],
        })
    }

    pub fn push_path(&mut self, path: &Path) {
        self.push_extrema(path.max_value(), path.sup_norm());
    }

    pub fn push_extrema(&mut self, max_value: f64, sup_norm: f64) {
        self.count += 1;
        let positive_max = max_value.max(0.0);
        for (q, (s, m)) in self.orders.iter().zip(self.sup.iter_mut().zip(self.max.iter_mut())) {
            let a = sup_norm.powf(*q);
            s[0].add(a);
            s[1].add(a * a);
            let b = positive_max.powf(*q);
            m[0].add(b);
            m[1].add(b * b);
        }
    }

    pub fn finish(&self) -> Result<SupMoments> {
        if self.count == 0 {
            return Err(Error::Empty("no paths accumulated"));
        }
        let n = self.count as f64;
        let stats = |acc: &[NeumaierSum; 2]| {
            let mean = acc[0].total() / n;
            let se = if self.count > 1 {
                ((acc[1].total() / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            (mean, se)
        };
        let (sup_norm, sup_norm_se) = self.sup.iter().map(stats).unzip();
        let (one_sided_max, one_sided_max_se) = self.max.iter().map(stats).unzip();
        Ok(SupMoments {
            orders: self.orders.clone(),
            count: self.count,
            sup_norm,
            sup_norm_se,
            one_sided_max,
            one_sided_max_se,
        })
    }
}

pub fn sup_functional_moments(ens: &Ensemble, orders: &[f64]) -> Result<SupMoments> {
    let mut acc = SupMomentAccumulator::new(orders)?;
    ens.samples().iter().for_each(|p| acc.push_path(p));
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathKind;

    #[test]
    fn sup_moments_examples() {
        let zero = Ensemble::from_paths(vec![Path::zero(PathKind::PiecewiseLinear); 3], "z").unwrap();
        let m = sup_functional_moments(&zero, &[1.0, 2.0]).unwrap();
        assert_eq!(m.sup_norm, vec![0.0, 0.0]);
        assert_eq!(m.one_sided_max, vec![0.0, 0.0]);
        let ramp = Ensemble::from_paths(vec![Path::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()], "t").unwrap();
        let m = sup_functional_moments(&ramp, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.sup_norm, vec![1.0; 3]);
        assert_eq!(m.one_sided_max, vec![1.0; 3]);
        let neg = Ensemble::from_paths(vec![Path::linear(vec![0.0, 1.0], vec![0.0, -2.0]).unwrap()], "n").unwrap();
        let m = sup_functional_moments(&neg, &[1.0]).unwrap();
        assert_eq!((m.sup_norm[0], m.one_sided_max[0]), (2.0, 0.0));
        assert!(SupMomentAccumulator::new(&[]).is_err());
        assert!(SupMomentAccumulator::new(&[1.0]).unwrap().finish().is_err());
    }

    #[test]
    fn self_match_has_zero_gaps() {
        let paths: Vec<Path> = (0..10)
            .map(|i| Path::linear(vec![0.0, 0.5, 1.0], vec![0.0, (i as f64).sin(), (i as f64 * 0.7).cos()]).unwrap())
            .collect();
        let e = Ensemble::from_paths(paths, "e").unwrap();
        let s = MetricOrder::new(3.0).unwrap();
        let r = moment_match(&e, &e, s, &[0.25, 0.5, 1.0], &MomentMatchOptions::default()).unwrap();
        assert_eq!((r.max_mean_gap, r.max_cov_gap), (0.0, 0.0));
        assert_eq!((r.finiteness, r.mean, r.covariance), (Verdict::Pass, Verdict::Pass, Verdict::Pass));
        let s1 = MetricOrder::new(1.0).unwrap();
        let r = moment_match(&e, &e, s1, &[0.5], &MomentMatchOptions::default()).unwrap();
        assert_eq!((r.mean, r.covariance), (Verdict::NotRequired, Verdict::NotRequired));
    }

    #[test]
    fn shifted_mean_is_detected() {
        let a = FddSample::new(vec![1.0], vec![-1.0, 1.0, -1.0, 1.0]).unwrap();
        let b = FddSample::new(vec![1.0], vec![9.0, 11.0, 9.0, 11.0]).unwrap();
        let s = MetricOrder::new(2.0).unwrap();
        let r = moment_match_samples(&a, &b, (1.0, 100.0), s, &MomentMatchOptions::default()).unwrap();
        assert_eq!(r.mean, Verdict::Fail);
        assert_eq!(r.max_mean_gap, 10.0);
        assert_eq!(r.covariance, Verdict::NotRequired);
    }
}
