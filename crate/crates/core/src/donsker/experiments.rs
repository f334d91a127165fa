//! Configurable experiments with JSON summaries and CSV sweep tables.

use serde::{Deserialize, Serialize};

use super::{bm_fdd, spatial_map, walk_ensemble, wiener_map, IncrementLaw, Interpolation};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::metric_order::MetricOrder;
use crate::metrics::bootstrap::{null_band, NullBand};
use crate::metrics::ks::{ks_critical_95, ks_one_sample, standard_normal_cdf};
use crate::metrics::{
    fdd_distance_samples, moment_match, sup_functional_moments, zeta_upper_bound, AssignmentMode,
    DistanceOptions, DistanceReport, FddSample, MomentMatchOptions, MomentMatchReport, SupMoments, SweepRow,
    Verdict,
};
use crate::path::{Path, PathKind};
use crate::recursion::{
    canonical_digest, contraction_constant, iterate_t, rate_trend, ContractionReport, FixedPointMap, RateEstimate,
    RateFunction,
};
use crate::seed::Seed;

pub const EXPERIMENTS: [&str; 4] = ["donsker", "bm-char", "spatial", "rates"];

/// Smallest ensemble accepted by distance experiments.
pub const MIN_DISTANCE_ENSEMBLE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "defaults::n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "defaults::ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default = "defaults::grid")]
    pub grid: Vec<f64>,
    #[serde(default = "defaults::s")]
    pub s: MetricOrder,
    #[serde(default = "defaults::increment")]
    pub increment: IncrementLaw,
    #[serde(default = "defaults::interpolation")]
    pub interpolation: Interpolation,
    /// Block size of the chunked assignment estimator.
    #[serde(default = "defaults::block_size")]
    pub block_size: usize,
    #[serde(default = "defaults::null_pairs")]
    pub null_pairs: usize,
    #[serde(default = "defaults::null_level")]
    pub null_level: f64,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    /// Walk length of the non-Gaussian start ensembles.
    #[serde(default = "defaults::start_walk")]
    pub start_walk: usize,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    #[serde(default = "defaults::rate")]
    pub rate: RateFunction,
    #[serde(default = "defaults::mc_samples")]
    pub mc_samples: usize,
}

mod defaults {
    use super::*;

    pub fn n_values() -> Vec<usize> {
        vec![8, 32, 128, 512]
    }
    pub fn ensemble_size() -> usize {
        4000
    }
    pub fn grid() -> Vec<f64> {
        crate::donsker::uniform_grid(8)
    }
    pub fn s() -> MetricOrder {
        MetricOrder::new(3.0).expect("valid order")
    }
    pub fn increment() -> IncrementLaw {
        IncrementLaw::Rademacher
    }
    pub fn interpolation() -> Interpolation {
        Interpolation::Linear
    }
    pub fn block_size() -> usize {
        128
    }
    pub fn null_pairs() -> usize {
        50
    }
    pub fn null_level() -> f64 {
        0.95
    }
    pub fn iterations() -> usize {
        8
    }
    pub fn start_walk() -> usize {
        8
    }
    pub fn beta() -> f64 {
        2.0
    }
    pub fn rate() -> RateFunction {
        RateFunction::Power { delta: 0.25 }
    }
    pub fn mc_samples() -> usize {
        1000
    }
}

impl ExperimentConfig {
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn validate(&self, experiment: &str) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_values.is_empty() || self.n_values[0] == 0 || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return fail("n_values must be positive and strictly increasing".into());
        }
        if self.grid.is_empty()
            || self.grid.iter().any(|t| !(0.0..=1.0).contains(t))
            || self.grid.windows(2).any(|w| w[0] >= w[1])
        {
            return fail("grid must be strictly increasing within [0, 1]".into());
        }
        if experiment != "rates" && self.ensemble_size < MIN_DISTANCE_ENSEMBLE {
            return fail(format!("ensemble_size must be at least {MIN_DISTANCE_ENSEMBLE}"));
        }
        if self.block_size == 0 || self.block_size > crate::metrics::ASSIGNMENT_CAP {
            return fail("block_size must lie in 1..=2048".into());
        }
        if self.null_pairs == 0 || !(0.0 < self.null_level && self.null_level < 1.0) {
            return fail("null_pairs must be positive and null_level in (0, 1)".into());
        }
        if self.iterations == 0 || self.start_walk == 0 || self.mc_samples == 0 {
            return fail("iterations, start_walk and mc_samples must be positive".into());
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return fail(format!("beta = {} must exceed 1", self.beta));
        }
        self.increment.validate()
    }

    /// SHA-256 of the canonical JSON form with defaults applied.
    pub fn digest(&self) -> String {
        canonical_digest(&serde_json::to_value(self).expect("serializable"))
    }

    fn distance_options(&self, seed: Seed) -> DistanceOptions {
        DistanceOptions {
            mode: if self.ensemble_size <= self.block_size {
                AssignmentMode::Exact
            } else {
                AssignmentMode::Chunked { block: self.block_size }
            },
            seed,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub summary: serde_json::Value,
    pub rows: Vec<SweepRow>,
}

impl ExperimentReport {
    fn new(experiment: &str, config: &ExperimentConfig, summary: impl Serialize, rows: Vec<SweepRow>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            config_digest: config.digest(),
            seed: config.seed,
            summary: serde_json::to_value(summary).expect("serializable summary"),
            rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn to_csv(&self) -> String {
        crate::metrics::sweep_csv(&self.rows)
    }
}

pub fn run_experiment(name: &str, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate(name)?;
    match name {
        "donsker" => donsker_convergence_experiment(config),
        "bm-char" => bm_characterization_experiment(config),
        "spatial" => spatial_experiment(config),
        "rates" => rates_experiment(config),
        other => Err(Error::Config(format!(
            "unknown experiment '{other}'; available: {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DonskerRow {
    pub n: usize,
    pub fdd_to_bm: DistanceReport,
    pub zeta_upper: f64,
    pub ell_s: DistanceReport,
    pub sup_moments: SupMoments,
    pub moment_match: MomentMatchReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DonskerSummary {
    pub rows: Vec<DonskerRow>,
    /// Least-squares slope of log ζ-bound against log n.
    pub zeta_loglog_slope: Option<f64>,
    pub moments_matched_all_n: bool,
}

/// Walk ensembles against Brownian references over `n_values`.
pub fn donsker_convergence_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate("donsker")?;
    let root = Seed(config.seed);
    let m = config.ensemble_size;
    let reference = bm_fdd(&config.grid, m, root.child(0))?;
    let normal = IncrementLaw::StandardNormal;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (i, &n) in config.n_values.iter().enumerate() {
        let seed = root.child(1).child(i as u64);
        let walks = walk_ensemble(n, m, &config.increment, config.interpolation, seed.child(0))?;
        let gauss = walk_ensemble(n, m, &normal, config.interpolation, seed.child(1))?;
        let fdd = fdd_distance_samples(
            &FddSample::from_ensemble(&walks, &config.grid)?,
            &reference,
            2.0,
            &config.distance_options(seed.child(2)),
        )?;
        let zeta = zeta_upper_bound(&walks, &gauss, config.s, &config.distance_options(seed.child(3)))?;
        let moments = sup_functional_moments(&walks, &[1.0, 2.0, 3.0])?;
        let matched = moment_match(&walks, &gauss, config.s, &config.grid, &MomentMatchOptions::default())?;
        let seed_value = seed.value();
        table.push(fdd.row(n, seed_value));
        table.push(SweepRow {
            n,
            estimator: "zeta_upper_bound".into(),
            value: zeta.value,
            stderr: zeta.ell_s.stderr,
            seed: seed_value,
        });
        for (k, q) in moments.orders.iter().enumerate() {
            table.push(SweepRow {
                n,
                estimator: format!("sup_moment_{q}"),
                value: moments.sup_norm[k],
                stderr: Some(moments.sup_norm_se[k]),
                seed: seed_value,
            });
            table.push(SweepRow {
                n,
                estimator: format!("max_moment_{q}"),
                value: moments.one_sided_max[k],
                stderr: Some(moments.one_sided_max_se[k]),
                seed: seed_value,
            });
        }
        rows.push(DonskerRow {
            n,
            fdd_to_bm: fdd,
            zeta_upper: zeta.value,
            ell_s: zeta.ell_s,
            sup_moments: moments,
            moment_match: matched,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.zeta_upper > 0.0)
        .map(|r| ((r.n as f64).ln(), r.zeta_upper.ln()))
        .collect();
    let matched = rows.iter().all(|r| {
        r.moment_match.mean != Verdict::Fail && r.moment_match.covariance != Verdict::Fail
    });
    let summary = DonskerSummary {
        zeta_loglog_slope: loglog_slope(&points),
        moments_matched_all_n: matched,
        rows,
    };
    Ok(ExperimentReport::new("donsker", config, summary, table))
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Whether the fdd of `T(μ)` on `grid` depends on the fdd of `μ` on `grid`
/// only, i.e. `grid` is mapped into itself by both inverse splits.
pub fn grid_closed_under_splits(grid: &[f64], beta: f64) -> bool {
    let contains = |x: f64| grid.iter().any(|g| (g - x).abs() < 1e-12);
    contains(0.0)
        && contains(1.0)
        && grid.iter().all(|&t| {
            if t <= 1.0 / beta {
                contains(beta * t)
            } else {
                contains((beta * t - 1.0) / (beta - 1.0))
            }
        })
}

/// Replaces every path by its linear interpolation on `grid`.
pub fn coarsen(ens: &Ensemble, grid: &[f64]) -> Result<Ensemble> {
    let samples = ens
        .samples()
        .iter()
        .map(|p| Path::from_points(PathKind::PiecewiseLinear, grid.to_vec(), p.eval_sorted(grid)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Ensemble::from_paths(samples, ens.meta().label.clone())?;
    *out.meta_mut() = ens.meta().clone();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub map: String,
    pub distances: Vec<DistanceReport>,
    pub null: NullBand,
    /// Steps with `d_{k+1} < d_k + sqrt(se_k^2 + se_{k+1}^2)`.
    pub decreasing_steps: usize,
    pub start_above_band: bool,
    pub final_within_band: bool,
    /// KS statistic of the `t = 1` marginal against the standard normal
    /// after every step; sees lattice starts that the fdd estimator's
    /// bias hides.
    pub terminal_ks: Vec<f64>,
    pub terminal_ks_null: NullBand,
    pub terminal_start_above_band: bool,
    /// Iterates were reduced to their grid values between steps.
    pub coarsened: bool,
}

/// Brownian null band for fdd distances at the config's grid and size.
pub fn bm_null_band(config: &ExperimentConfig, seed: Seed) -> Result<NullBand> {
    null_band(config.null_pairs, config.null_level, seed, |s| {
        let a = bm_fdd(&config.grid, config.ensemble_size, s.child(0))?;
        let b = bm_fdd(&config.grid, config.ensemble_size, s.child(1))?;
        Ok(fdd_distance_samples(&a, &b, 2.0, &config.distance_options(s.child(2)))?.value)
    })
}

/// Iterates `map` from `start`, recording fdd distances to one exact
/// Brownian reference sample after every step.
pub fn iterate_towards_bm(
    map: &FixedPointMap,
    start: Ensemble,
    config: &ExperimentConfig,
    seed: Seed,
) -> Result<IterationSummary> {
    let reference = bm_fdd(&config.grid, config.ensemble_size, seed.child(0))?;
    let coarsened = grid_closed_under_splits(&config.grid, config.beta);
    let mut current = if coarsened { coarsen(&start, &config.grid)? } else { start };
    let mut distances = Vec::with_capacity(config.iterations + 1);
    let mut terminal_ks = Vec::with_capacity(config.iterations + 1);
    for it in 0..=config.iterations {
        let step = seed.child(1).child(it as u64);
        let terminal: Vec<f64> = current.samples().iter().map(|p| p.eval_unchecked(1.0)).collect();
        terminal_ks.push(ks_one_sample(&terminal, standard_normal_cdf)?);
        let sample = FddSample::from_ensemble(&current, &config.grid)?;
        distances.push(fdd_distance_samples(&sample, &reference, 2.0, &config.distance_options(step.child(0)))?);
        if it < config.iterations {
            current = iterate_t(map, &current, config.ensemble_size, step.child(1))?;
            if coarsened {
                current = coarsen(&current, &config.grid)?;
            }
        }
    }
    let null = bm_null_band(config, seed.child(2))?;
    let terminal_ks_null = null_band(config.null_pairs, config.null_level, seed.child(3), |s| {
        ks_one_sample(bm_fdd(&[1.0], config.ensemble_size, s)?.values(), standard_normal_cdf)
    })?;
    let decreasing_steps = distances
        .windows(2)
        .filter(|w| {
            let se = (w[0].stderr.unwrap_or(0.0).powi(2) + w[1].stderr.unwrap_or(0.0).powi(2)).sqrt();
            w[1].value < w[0].value + se
        })
        .count();
    Ok(IterationSummary {
        map: map.description().to_string(),
        start_above_band: !null.contains(distances[0].value),
        final_within_band: null.contains(distances.last().expect("at least one").value),
        decreasing_steps,
        distances,
        null,
        terminal_start_above_band: !terminal_ks_null.contains(terminal_ks[0]),
        terminal_ks,
        terminal_ks_null,
        coarsened,
    })
}

/// Iterates the Wiener map from a scaled Rademacher walk (Brownian mean and
/// covariance on the walk's grid, non-Gaussian marginals).
pub fn bm_characterization_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate("bm-char")?;
    let root = Seed(config.seed);
    let start = walk_ensemble(
        config.start_walk,
        config.ensemble_size,
        &IncrementLaw::Rademacher,
        Interpolation::Linear,
        root.child(0),
    )?;
    let summary = iterate_towards_bm(&wiener_map(config.beta)?, start, config, root.child(1))?;
    let rows = summary
        .distances
        .iter()
        .enumerate()
        .map(|(it, d)| SweepRow {
            n: it,
            estimator: format!("fdd_{}", d.estimator.name()),
            value: d.value,
            stderr: d.stderr,
            seed: config.seed,
        })
        .collect();
    Ok(ExperimentReport::new("bm-char", config, summary, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialSummary {
    /// KS statistic of the `t = 1` marginal against the standard normal.
    pub ks: Vec<f64>,
    pub ks_null: NullBand,
    pub ks_critical_95: f64,
    pub monotone: bool,
    pub final_within_band: bool,
    pub contraction: ContractionReport,
}

/// Iterates `(Z + Ẑ)/√2` from a Rademacher walk and follows the terminal marginal.
pub fn spatial_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate("spatial")?;
    let root = Seed(config.seed);
    let m = config.ensemble_size;
    let map = spatial_map();
    let mut current = walk_ensemble(
        config.start_walk,
        m,
        &IncrementLaw::Rademacher,
        Interpolation::Linear,
        root.child(0),
    )?;
    let mut ks = Vec::with_capacity(config.iterations + 1);
    for it in 0..=config.iterations {
        let terminal: Vec<f64> = current.samples().iter().map(|p| p.eval_unchecked(1.0)).collect();
        ks.push(ks_one_sample(&terminal, standard_normal_cdf)?);
        if it < config.iterations {
            current = coarsen(&iterate_t(&map, &current, m, root.child(1).child(it as u64))?, &config.grid)?;
        }
    }
    let ks_null = null_band(config.null_pairs, config.null_level, root.child(2), |s| {
        let fresh = bm_fdd(&[1.0], m, s)?;
        ks_one_sample(fresh.values(), standard_normal_cdf)
    })?;
    let summary = SpatialSummary {
        monotone: ks.windows(2).all(|w| w[1] <= w[0]),
        final_within_band: ks_null.contains(*ks.last().expect("nonempty")),
        ks_critical_95: ks_critical_95(m),
        contraction: contraction_constant(&map, config.s, 1, root.child(3))?,
        ks_null,
        ks,
    };
    let rows = summary
        .ks
        .iter()
        .enumerate()
        .map(|(it, &v)| SweepRow {
            n: it,
            estimator: "ks_terminal".into(),
            value: v,
            stderr: None,
            seed: config.seed,
        })
        .collect();
    Ok(ExperimentReport::new("spatial", config, summary, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatesSummary {
    pub rate: RateFunction,
    pub trend: Vec<RateEstimate>,
    /// Value at the largest size; stands in for the limsup.
    pub lstar_hat: Option<f64>,
    pub wiener: ContractionReport,
    pub spatial: ContractionReport,
}

/// Rate-condition factors of the walk recursion and contraction constants
/// of both limit maps.
pub fn rates_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate("rates")?;
    let root = Seed(config.seed);
    let spec = super::donsker_spec(&config.increment, config.interpolation)?;
    let sizes: Vec<usize> = config.n_values.iter().copied().filter(|&n| n >= spec.n0()).collect();
    let (trend, lstar_hat) = rate_trend(&spec, config.s, config.rate, &sizes, config.mc_samples, root.child(0))?;
    let rows = trend
        .iter()
        .map(|r| SweepRow {
            n: r.n,
            estimator: "rate_factor".into(),
            value: r.value,
            stderr: Some(r.stderr),
            seed: config.seed,
        })
        .collect();
    let summary = RatesSummary {
        rate: config.rate,
        wiener: contraction_constant(&wiener_map(config.beta)?, config.s, config.mc_samples, root.child(1))?,
        spatial: contraction_constant(&spatial_map(), config.s, config.mc_samples, root.child(2))?,
        trend,
        lstar_hat,
    };
    Ok(ExperimentReport::new("rates", config, summary, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n_values: vec![4, 16],
            ensemble_size: 200,
            null_pairs: 5,
            iterations: 2,
            mc_samples: 10,
            ..ExperimentConfig::with_seed(seed)
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(c.grid.len(), 9);
        assert_eq!(c.s.s(), 3.0);
        assert!(serde_json::from_str::<ExperimentConfig>("{}").is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed": 1, "bogus": 2}"#).is_err());
        let mut bad = small(1);
        bad.n_values = vec![8, 4];
        assert!(bad.validate("donsker").is_err());
        let mut bad = small(1);
        bad.ensemble_size = 50;
        assert!(bad.validate("donsker").is_err());
        assert!(bad.validate("rates").is_ok());
        assert!(run_experiment("nope", &small(1)).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = small(1);
        let mut b = small(1);
        assert_eq!(a.digest(), b.digest());
        b.ensemble_size += 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn grid_closure() {
        assert!(grid_closed_under_splits(&crate::donsker::uniform_grid(8), 2.0));
        assert!(!grid_closed_under_splits(&[0.0, 0.3, 1.0], 2.0));
        assert!(!grid_closed_under_splits(&crate::donsker::uniform_grid(8), 3.0));
    }

    #[test]
    fn experiments_run_small() {
        for name in EXPERIMENTS {
            let r = run_experiment(name, &small(3)).unwrap();
            assert_eq!(r.experiment, name);
            assert!(r.to_csv().starts_with("n,estimator,value,stderr,seed\n"));
            assert_eq!(r, run_experiment(name, &small(3)).unwrap());
        }
    }

    #[test]
    fn zero_start_stays_zero() {
        let zero = Ensemble::from_paths(vec![Path::zero(PathKind::PiecewiseLinear); 200], "0").unwrap();
        let config = small(2);
        let s = iterate_towards_bm(&wiener_map(2.0).unwrap(), zero, &config, Seed(9)).unwrap();
        assert_eq!(s.distances.len(), 3);
        let d0 = s.distances[0].value;
        assert!(s.distances.iter().all(|d| d.value == d0));
    }

    #[test]
    fn lattice_start_is_visible_at_t1() {
        let config = ExperimentConfig {
            ensemble_size: 2000,
            null_pairs: 10,
            iterations: 1,
            ..ExperimentConfig::with_seed(4)
        };
        let r = bm_characterization_experiment(&config).unwrap();
        let s: IterationSummary = serde_json::from_value(r.summary).unwrap();
        assert!(s.terminal_start_above_band, "{:?}", s.terminal_ks);
        assert!(s.terminal_ks[1] < s.terminal_ks[0]);
    }
}
