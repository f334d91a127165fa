//! Resampling utilities: bootstrap standard errors and simulated null bands.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{Error, Result};
use crate::seed::{Seed, SimRng};

pub fn resample_indices(m: usize, rng: &mut SimRng) -> Vec<usize> {
    draw_indices(m, m, rng)
}

/// `count` uniform draws with replacement from `0..len`.
pub fn draw_indices(len: usize, count: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..count).map(|_| rng.random_range(0..len)).collect()
}

/// Standard deviation of `statistic` over `reps` paired bootstrap resamples
/// (indices into two samples of sizes `m_a`, `m_b`).
pub fn bootstrap_se<F>(m_a: usize, m_b: usize, reps: usize, seed: Seed, statistic: F) -> Result<f64>
where
    F: Fn(&[usize], &[usize]) -> Result<f64> + Sync,
{
    if reps < 2 {
        return Err(Error::Config("bootstrap needs at least 2 resamples".into()));
    }
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.child(r as u64).rng();
            let ia = resample_indices(m_a, &mut rng);
            let ib = resample_indices(m_b, &mut rng);
            statistic(&ia, &ib)
        })
        .collect::<Result<_>>()?;
    Ok(std_dev(&values))
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Distribution of a distance between independent same-law inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullBand {
    pub level: f64,
    /// Upper `level` quantile of `values`.
    pub threshold: f64,
    pub values: Vec<f64>,
}

impl NullBand {
    pub fn contains(&self, value: f64) -> bool {
        value <= self.threshold
    }
}

/// Evaluates `statistic` on `pairs` independent seeds `seed.child(i)`.
pub fn null_band<F>(pairs: usize, level: f64, seed: Seed, statistic: F) -> Result<NullBand>
where
    F: Fn(Seed) -> Result<f64> + Sync,
{
    if pairs == 0 {
        return Err(Error::Empty("null band needs at least one pair"));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::domain(format!("quantile level {level} outside [0, 1]")));
    }
    let values: Vec<f64> = (0..pairs)
        .map(|i| statistic(seed.child(i as u64)))
        .collect::<Result<_>>()?;
    Ok(NullBand {
        level,
        threshold: quantile(&values, level),
        values,
    })
}

/// Sample quantile (median-unbiased interpolation between order statistics).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    Data::new(values.to_vec()).quantile(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_bootstrap_matches_classical_se() {
        let mut rng = Seed(4).rng();
        let xs: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let se = bootstrap_se(xs.len(), 1, 400, Seed(5), |ia, _| {
            Ok(ia.iter().map(|&i| xs[i]).sum::<f64>() / ia.len() as f64)
        })
        .unwrap();
        let classical = std_dev(&xs) / (xs.len() as f64).sqrt();
        assert!((se / classical - 1.0).abs() < 0.15, "{se} vs {classical}");
    }

    #[test]
    fn null_band_threshold() {
        let band = null_band(101, 0.95, Seed(1), |s| Ok(s.value() as f64 % 1000.0)).unwrap();
        assert_eq!(band.values.len(), 101);
        let below = band.values.iter().filter(|&&v| band.contains(v)).count();
        assert!((94..=98).contains(&below), "{below}");
        assert!(null_band(0, 0.95, Seed(1), |_| Ok(0.0)).is_err());
    }

    #[test]
    fn quantile_endpoints() {
        let v = [3.0, 1.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 3.0);
        assert_eq!(quantile(&v, 0.5), 2.0);
    }
}
