//! Kolmogorov-Smirnov statistics.
//!
//! One-sample convention: the empirical CDF is right-continuous and the
//! statistic is `max_i max(i/m - F(x_(i)), F(x_(i)) - (i-1)/m)`, i.e. the
//! sup is taken over the sample points with both one-sided limits of the
//! empirical CDF. For a continuous reference this is the usual statistic;
//! for a reference with an atom at a sample point it compares `F` at the atom
//! with the empirical CDF just left of it, so `{0}` against a point mass at 0
//! gives 1.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub enum KsReference<'a> {
    Cdf(&'a dyn Fn(f64) -> f64),
    Sample(&'a [f64]),
}

pub fn ks_statistic(sample: &[f64], reference: KsReference<'_>) -> Result<f64> {
    match reference {
        KsReference::Cdf(f) => ks_one_sample(sample, f),
        KsReference::Sample(b) => ks_two_sample(sample, b),
    }
}

pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let sorted = sorted_finite(sample)?;
    let m = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    Ok(d)
}

/// `sup_x |F_a(x) - F_b(x)|` over the pooled sample.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (ma, mb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / ma - j as f64 / mb).abs());
    }
    Ok(d)
}

/// Asymptotic 95% critical value `1.36 / sqrt(m)`.
pub fn ks_critical_95(m: usize) -> f64 {
    1.36 / (m as f64).sqrt()
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn sorted_finite(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("KS sample".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}
