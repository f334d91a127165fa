//! Brute-force reference computations.
//!
//! Nothing in the algorithm modules calls into this file; it exists so the
//! acceptance checks and tests can compare fast implementations against
//! slow, independent ones (enumeration, permutation search, quadrature).

use statrs::distribution::{ContinuousCDF, Normal};

/// `E[S^n_s S^n_t]` for a Rademacher walk by enumerating all `2^n` sign
/// patterns and evaluating the interpolation formula directly.
pub fn rademacher_covariance(n: usize, s: f64, t: f64) -> f64 {
    assert!((1..=20).contains(&n), "enumeration limited to n <= 20");
    let walk_at = |signs: &[f64], t: f64| -> f64 {
        let nt = n as f64 * t;
        let k = (nt.floor() as usize).min(n);
        let mut sum: f64 = signs[..k].iter().sum();
        if k < n {
            sum += (nt - k as f64) * signs[k];
        }
        sum / (n as f64).sqrt()
    };
    let patterns = 1usize << n;
    let mut total = 0.0;
    let mut signs = vec![0.0; n];
    for mask in 0..patterns {
        for (i, v) in signs.iter_mut().enumerate() {
            *v = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        total += walk_at(&signs, s) * walk_at(&signs, t);
    }
    total / patterns as f64
}

/// Minimum of `Σ_i cost(i, σ(i))` over all permutations (Heap's algorithm).
pub fn permutation_min(m: usize, cost: impl Fn(usize, usize) -> f64) -> f64 {
    let mut perm: Vec<usize> = (0..m).collect();
    let eval = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Piecewise-linear interpolation by linear search.
pub fn pl_eval(breakpoints: &[f64], values: &[f64], t: f64) -> f64 {
    for w in 0..breakpoints.len() - 1 {
        let (a, b) = (breakpoints[w], breakpoints[w + 1]);
        if t <= b || w + 2 == breakpoints.len() {
            let lam = if b > a { (t - a) / (b - a) } else { 0.0 };
            return values[w] + lam * (values[w + 1] - values[w]);
        }
    }
    values[0]
}

/// Sup distance of two piecewise-linear functions: the difference is linear
/// between consecutive points of the union of breakpoints.
pub fn pl_sup_distance(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let mut knots: Vec<f64> = a.0.iter().chain(b.0).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots
        .iter()
        .map(|&t| (pl_eval(a.0, a.1, t) - pl_eval(b.0, b.1, t)).abs())
        .fold(0.0, f64::max)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol.max(8.0 * f64::EPSILON * whole.abs()) {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `(∫_0^1 |f|^p)^{1/p}` for a piecewise-linear `f` by quadrature on each
/// linear piece.
pub fn pl_lp_norm(breakpoints: &[f64], values: &[f64], p: f64) -> f64 {
    let f = |t: f64| pl_eval(breakpoints, values, t).abs().powf(p);
    let total: f64 = breakpoints
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], 1e-15))
        .sum();
    total.powf(1.0 / p)
}

/// `E max_{t ≤ 1} W_t = ∫_0^∞ P(max W ≥ x) dx` with `P(max W ≥ x) = 2(1 - Φ(x))`.
pub fn bm_expected_max() -> f64 {
    let normal = Normal::standard();
    let f = |x: f64| 2.0 * normal.sf(x);
    adaptive_simpson(&f, 0.0, 12.0, 1e-13)
}

/// `P(sup_{t ≤ 1} |W_t| < x)` by the theta series, which converges for
/// every `x > 0` and involves no normal CDF evaluations.
pub fn bm_abs_sup_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        theta_series(x)
    }
}

/// `(4/π) Σ_k (-1)^k/(2k+1) exp(-(2k+1)^2 π^2 / (8x^2))`.
fn theta_series(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut total = 0.0;
    for k in 0..4000 {
        let j = (2 * k + 1) as f64;
        let term = (-(j * j) * PI * PI / (8.0 * x * x)).exp() / j;
        total += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    4.0 / PI * total
}

/// `E sup_{t ≤ 1} |W_t| = ∫_0^∞ (1 - P(sup|W| < x)) dx`.
pub fn bm_expected_abs_sup() -> f64 {
    let f = |x: f64| 1.0 - bm_abs_sup_cdf(x);
    adaptive_simpson(&f, 0.0, 12.0, 1e-13)
}
