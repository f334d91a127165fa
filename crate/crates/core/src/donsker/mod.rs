//! Random walks, linearized Brownian motion and the Wiener fixed point.
//!
//! The rescaled walk
//!
//! ```text
//! S^n_t = n^{-1/2} ( Σ_{k ≤ ⌊nt⌋} V_k + (nt - ⌊nt⌋) V_{⌊nt⌋+1} )
//! ```
//!
//! splits at `c = ⌈n/2⌉` into two independent walks of lengths `c` and
//! `n - c`:
//!
//! ```text
//! S^n = √(c/n) φ_β(S^c) + √((n-c)/n) ψ_β(Ŝ^{n-c}),   β = n / c,
//! ```
//!
//! and Brownian motion satisfies the limit identity
//! `W = √(1/β) φ_β(W) + √((β-1)/β) ψ_β(Ŵ)` for every `β > 1`.

pub mod experiments;

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ensemble::{check_times, Ensemble, EnsembleMeta, PathSampler};
use crate::error::{Error, Result};
use crate::metrics::FddSample;
use crate::operators::{donsker_coefficients, CoefficientDraw, PathOperator};
use crate::path::{Path, PathKind};
use crate::recursion::{CoefficientSampler, FixedPointMap, RecursionSpec};
use crate::seed::{Seed, SimRng};

/// Tolerance for the mean-zero, unit-variance check of tabulated laws.
pub const TABLE_MOMENT_TOL: f64 = 1e-12;

/// Law of the walk increments; all have mean 0 and variance 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IncrementLaw {
    Rademacher,
    StandardNormal,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    Table { values: Vec<f64>, probs: Vec<f64> },
}

impl IncrementLaw {
    pub fn validate(&self) -> Result<()> {
        let IncrementLaw::Table { values, probs } = self else {
            return Ok(());
        };
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Config("table needs equally many values and probabilities".into()));
        }
        if values.iter().chain(probs).any(|x| !x.is_finite()) || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Config("table entries must be finite, probabilities nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
        let second: f64 = values.iter().zip(probs).map(|(v, p)| v * v * p).sum();
        if (total - 1.0).abs() > TABLE_MOMENT_TOL {
            return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
        }
        if mean.abs() > TABLE_MOMENT_TOL || (second - mean * mean - 1.0).abs() > TABLE_MOMENT_TOL {
            return Err(Error::Config(format!(
                "table law has mean {mean} and variance {}; need 0 and 1",
                second - mean * mean
            )));
        }
        Ok(())
    }

    /// Largest `q` with `E|V|^q < ∞`. Every supported law has all moments.
    pub fn moment_order_available(&self) -> f64 {
        f64::INFINITY
    }

    pub fn sampler(&self) -> Result<IncrementSampler> {
        self.validate()?;
        let table = match self {
            IncrementLaw::Table { values, probs } => Some((
                WeightedIndex::new(probs).map_err(|e| Error::Config(e.to_string()))?,
                values.clone(),
            )),
            _ => None,
        };
        Ok(IncrementSampler { law: self.clone(), table })
    }
}

#[derive(Clone, Debug)]
pub struct IncrementSampler {
    law: IncrementLaw,
    table: Option<(WeightedIndex<f64>, Vec<f64>)>,
}

impl IncrementSampler {
    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match &self.law {
            IncrementLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementLaw::StandardNormal => StandardNormal.sample(rng),
            IncrementLaw::Uniform => {
                let r = 3f64.sqrt();
                rng.random_range(-r..=r)
            }
            IncrementLaw::Table { .. } => {
                let (index, values) = self.table.as_ref().expect("built with table");
                values[index.sample(rng)]
            }
        }
    }

    pub fn draw(&self, n: usize, rng: &mut SimRng) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    /// Right-continuous step path.
    Constant,
}

impl Interpolation {
    pub fn kind(self) -> PathKind {
        match self {
            Interpolation::Linear => PathKind::PiecewiseLinear,
            Interpolation::Constant => PathKind::PiecewiseConstant,
        }
    }
}

/// `S^n` from explicit increments.
pub fn random_walk_path(n: usize, increments: &[f64], interpolation: Interpolation) -> Result<Path> {
    if n == 0 {
        return Err(Error::domain("walk length must be at least 1"));
    }
    if increments.len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: increments.len(),
        });
    }
    let scale = (n as f64).sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut sum = 0.0;
    values.push(0.0);
    for v in increments {
        sum += v;
        values.push(sum / scale);
    }
    let breakpoints = (0..=n).map(|k| k as f64 / n as f64).collect();
    Path::from_points(interpolation.kind(), breakpoints, values)
}

/// `Cov(S^n_s, S^n_t)` in closed form.
pub fn covariance_exact(n: usize, s: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)) {
        return Err(Error::domain(format!("times ({s}, {t}) outside [0, 1]")));
    }
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    let nf = n as f64;
    let (ks, kt) = ((nf * s).floor(), (nf * t).floor());
    if ks < kt {
        Ok(s)
    } else {
        Ok((ks + (nf * s - ks) * (nf * t - kt)) / nf)
    }
}

/// One walk with increments drawn from `seed`.
pub fn walk_sample(n: usize, increments: &IncrementSampler, interpolation: Interpolation, seed: Seed) -> Result<Path> {
    let mut rng = seed.rng();
    random_walk_path(n, &increments.draw(n, &mut rng), interpolation)
}

/// Linearized Brownian motion `W^n`: the linear walk with Gaussian increments.
pub fn linearized_bm(n: usize, seed: Seed) -> Result<Path> {
    let normal = IncrementLaw::StandardNormal.sampler()?;
    walk_sample(n, &normal, Interpolation::Linear, seed)
}

/// `m` independent walks, sample `i` from `seed.child(i)`.
pub fn walk_ensemble(
    n: usize,
    m: usize,
    law: &IncrementLaw,
    interpolation: Interpolation,
    seed: Seed,
) -> Result<Ensemble> {
    let sampler = law.sampler()?;
    let samples = (0..m)
        .into_par_iter()
        .map(|i| walk_sample(n, &sampler, interpolation, seed.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(
        samples,
        EnsembleMeta {
            label: format!("S_{n}"),
            seed: Some(seed.value()),
            spec_digest: None,
        },
    )
}

fn bm_values(times: &[f64], rng: &mut SimRng) -> Vec<f64> {
    let mut prev = 0.0;
    let mut w = 0.0;
    times
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(rng);
            w += (t - prev).sqrt() * z;
            prev = t;
            w
        })
        .collect()
}

fn check_increasing(times: &[f64]) -> Result<()> {
    check_times(times)?;
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// Exact Brownian values at `times` for `m` independent paths.
pub fn bm_fdd(times: &[f64], m: usize, seed: Seed) -> Result<FddSample> {
    check_increasing(times)?;
    if m == 0 {
        return Err(Error::Empty("bm_fdd sample size"));
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| bm_values(times, &mut seed.child(i as u64).rng()))
        .collect();
    FddSample::new(times.to_vec(), rows.concat())
}

/// Linear interpolation of exact Brownian values on `{0} ∪ times ∪ {1}`.
pub fn bm_grid_ensemble(times: &[f64], m: usize, seed: Seed) -> Result<Ensemble> {
    check_increasing(times)?;
    let mut grid: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0 && t < 1.0).collect();
    grid.push(1.0);
    let samples = (0..m)
        .into_par_iter()
        .map(|i| {
            let values = bm_values(&grid, &mut seed.child(i as u64).rng());
            let mut bps = vec![0.0];
            bps.extend(&grid);
            let mut vals = vec![0.0];
            vals.extend(values);
            Path::linear(bps, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(
        samples,
        EnsembleMeta {
            label: "bm_grid".into(),
            seed: Some(seed.value()),
            spec_digest: None,
        },
    )
}

struct FixedPath(Path);

impl PathSampler for FixedPath {
    fn kind(&self) -> PathKind {
        self.0.kind()
    }

    fn sample(&self, _: &mut SimRng) -> Path {
        self.0.clone()
    }
}

struct OneStep {
    increments: IncrementSampler,
    interpolation: Interpolation,
}

impl PathSampler for OneStep {
    fn kind(&self) -> PathKind {
        self.interpolation.kind()
    }

    fn sample(&self, rng: &mut SimRng) -> Path {
        random_walk_path(1, &[self.increments.sample(rng)], self.interpolation).expect("one increment")
    }
}

struct DonskerCoefficients;

impl CoefficientSampler for DonskerCoefficients {
    fn draw(&self, n: usize, _: &mut SimRng) -> CoefficientDraw {
        donsker_coefficients(n).expect("n >= n0 = 2")
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// The walk as a recursive equation: `n0 = 2`, `X_0 = 0`, `X_1 = S^1`.
pub fn donsker_spec(law: &IncrementLaw, interpolation: Interpolation) -> Result<RecursionSpec> {
    let increments = law.sampler()?;
    let base: Vec<Arc<dyn PathSampler>> = vec![
        Arc::new(FixedPath(Path::zero(interpolation.kind()))),
        Arc::new(OneStep {
            increments,
            interpolation,
        }),
    ];
    RecursionSpec::new(
        2,
        2,
        base,
        Arc::new(DonskerCoefficients),
        json!({"model": "donsker", "increment": law, "interpolation": interpolation}),
    )
}

/// `μ ↦ Law(√(1/β) φ_β(Z) + √((β-1)/β) ψ_β(Ẑ))`.
pub fn wiener_map(beta: f64) -> Result<FixedPointMap> {
    let front = PathOperator::scaled((1.0 / beta).sqrt(), PathOperator::front_split(beta)?);
    let back = PathOperator::scaled(((beta - 1.0) / beta).sqrt(), PathOperator::back_split(beta)?);
    FixedPointMap::deterministic(vec![front, back], None, json!({"map": "wiener", "beta": beta}))
}

/// `μ ↦ Law((Z + Ẑ)/√2)`.
pub fn spatial_map() -> FixedPointMap {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    FixedPointMap::deterministic(
        vec![PathOperator::Scale(c), PathOperator::Scale(c)],
        None,
        json!({"map": "spatial"}),
    )
    .expect("two scale operators")
}

/// `{0, 1/k, …, 1}`.
pub fn uniform_grid(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}
