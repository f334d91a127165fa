//! Exact piecewise-linear and piecewise-constant paths on `[0, 1]`.
//!
//! A [`Path`] stores one value per breakpoint for both kinds:
//!
//! * `PiecewiseLinear`: `values[i]` is the path value at `breakpoints[i]`,
//!   with linear interpolation in between.
//! * `PiecewiseConstant`: `values[i]` is the value on
//!   `[breakpoints[i], breakpoints[i + 1])`, and the last entry is the value
//!   at `t = 1`. Paths built from interval values are continuous in 1 (the
//!   terminal value repeats the last interval); a distinct terminal value
//!   encodes a jump at 1.
//!
//! Every constructor deduplicates breakpoints closer than [`DEDUP_TOL`] and
//! removes redundant interior breakpoints, so two paths that agree pointwise
//! have the same representation up to rounding.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Breakpoints closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-12;
/// Relative slack of the collinearity and equal-value tests used by
/// canonicalization.
pub const CANON_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    PiecewiseLinear,
    PiecewiseConstant,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::PiecewiseLinear => "piecewise_linear",
            PathKind::PiecewiseConstant => "piecewise_constant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct Path {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPath {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPath> for Path {
    type Error = Error;

    fn try_from(raw: RawPath) -> Result<Self> {
        Path::from_points(raw.kind, raw.breakpoints, raw.values)
    }
}

impl Path {
    /// Builds a path from breakpoints and one value per breakpoint.
    ///
    /// Breakpoints must be nondecreasing, start at 0 and end at 1 (each up to
    /// [`DEDUP_TOL`]); near-duplicates are merged and the result is put in
    /// canonical form.
    pub fn from_points(kind: PathKind, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPath("need at least the breakpoints 0 and 1".into()));
        }
        if let Some(x) = breakpoints.iter().chain(&values).find(|x| !x.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite entry {x}")));
        }
        let first = breakpoints[0];
        let last = breakpoints[breakpoints.len() - 1];
        if first.abs() > DEDUP_TOL || (last - 1.0).abs() > DEDUP_TOL {
            return Err(Error::InvalidPath(format!(
                "breakpoints must span [0, 1], got [{first}, {last}]"
            )));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] < w[0] - DEDUP_TOL) {
            return Err(Error::InvalidPath(format!(
                "breakpoints not increasing: {} after {}",
                w[1], w[0]
            )));
        }
        Ok(Self::from_sorted(kind, breakpoints, values))
    }

    /// Piecewise-linear path through `(breakpoints[i], values[i])`.
    pub fn linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_points(PathKind::PiecewiseLinear, breakpoints, values)
    }

    /// Piecewise-constant path with `interval_values[i]` on
    /// `[breakpoints[i], breakpoints[i + 1])`, continuous in 1.
    pub fn steps(breakpoints: Vec<f64>, mut interval_values: Vec<f64>) -> Result<Self> {
        if interval_values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints need {} interval values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                interval_values.len()
            )));
        }
        let terminal = *interval_values
            .last()
            .ok_or_else(|| Error::InvalidPath("no intervals".into()))?;
        interval_values.push(terminal);
        Self::from_points(PathKind::PiecewiseConstant, breakpoints, interval_values)
    }

    pub fn constant(kind: PathKind, value: f64) -> Self {
        Path {
            kind,
            breakpoints: vec![0.0, 1.0],
            values: vec![value, value],
        }
    }

    pub fn zero(kind: PathKind) -> Self {
        Self::constant(kind, 0.0)
    }

    /// Deduplicates and canonicalizes already-sorted input. Callers guarantee
    /// finite entries, sortedness up to tolerance and endpoints at 0 and 1.
    pub(crate) fn from_sorted(kind: PathKind, breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let (bps, vals) = dedup(kind, breakpoints, values);
        let (breakpoints, values) = canonicalize(kind, bps, vals);
        Path {
            kind,
            breakpoints,
            values,
        }
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of canonical breakpoints, including 0 and 1.
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at `t`. Piecewise-constant paths are right-continuous and take
    /// their terminal value at 1.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("evaluation time {t} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let n = self.breakpoints.len();
        let i = self.breakpoints.partition_point(|&b| b <= t).clamp(1, n) - 1;
        self.value_in_segment(i, t)
    }

    fn value_in_segment(&self, i: usize, t: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        if i >= last {
            return self.values[last];
        }
        match self.kind {
            PathKind::PiecewiseConstant => self.values[i],
            PathKind::PiecewiseLinear => {
                let (t0, t1) = (self.breakpoints[i], self.breakpoints[i + 1]);
                let (v0, v1) = (self.values[i], self.values[i + 1]);
                v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
            }
        }
    }

    /// Evaluates at nondecreasing times with a moving cursor. Times within
    /// [`DEDUP_TOL`] below a breakpoint are treated as that breakpoint.
    pub fn eval_sorted(&self, times: &[f64]) -> Vec<f64> {
        let n = self.breakpoints.len();
        let mut i = 0;
        times
            .iter()
            .map(|&t| {
                while i + 1 < n && self.breakpoints[i + 1] <= t + DEDUP_TOL {
                    i += 1;
                }
                self.value_in_segment(i, t)
            })
            .collect()
    }

    /// Exact supremum of `|f|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Supremum of `t ↦ f(t)`.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_t |f(t) - g(t)|` without materializing the difference.
    pub fn sup_distance(&self, other: &Path) -> f64 {
        if self.kind != other.kind {
            return diff_segments(self, Some(other))
                .iter()
                .fold(0.0_f64, |m, s| m.max(s.start.abs()).max(s.end.abs()))
                .max((self.eval_unchecked(1.0) - other.eval_unchecked(1.0)).abs());
        }
        let (fb, fv, gb, gv) = (
            &self.breakpoints,
            &self.values,
            &other.breakpoints,
            &other.values,
        );
        let linear = self.kind == PathKind::PiecewiseLinear;
        let interp = |b: &[f64], v: &[f64], j: usize, t: f64| -> f64 {
            if linear {
                v[j - 1] + (v[j] - v[j - 1]) * ((t - b[j - 1]) / (b[j] - b[j - 1]))
            } else {
                v[j - 1]
            }
        };
        let (mut i, mut j, mut max) = (0usize, 0usize, 0.0f64);
        while i < fb.len() && j < gb.len() {
            let (tf, tg) = (fb[i], gb[j]);
            let d = if (tf - tg).abs() <= DEDUP_TOL {
                i += 1;
                j += 1;
                fv[i - 1] - gv[j - 1]
            } else if tf < tg {
                i += 1;
                fv[i - 1] - interp(gb, gv, j, tf)
            } else {
                j += 1;
                interp(fb, fv, i, tg) - gv[j - 1]
            };
            max = max.max(d.abs());
        }
        max
    }

    /// `(∫₀¹ f(t)^p dt)^{1/p}` for even `p ≥ 2`, integrated in closed form.
    pub fn lp_norm(&self, p: u32) -> Result<f64> {
        check_even(p, 2)?;
        let scale = self.sup_norm();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut acc = NeumaierSum::default();
        for seg in diff_segments(self, None) {
            acc.add(seg.len * mean_power(seg.start / scale, seg.end / scale, p));
        }
        Ok(scale * acc.total().max(0.0).powf(1.0 / p as f64))
    }

    /// Smoothed distance functional `L_p((1 + (f - y)^2)^{1/2})` for even
    /// `p ≥ 4`. Kinds may differ; the difference is affine on merged segments.
    pub fn psi_smooth(&self, y: &Path, p: u32) -> Result<f64> {
        check_even(p, 4)?;
        let q = p / 2;
        let binom = binomials(q);
        let mut acc = NeumaierSum::default();
        for seg in diff_segments(self, Some(y)) {
            // (1 + g^2)^q = sum_k C(q, k) g^{2k}
            let mut inner = 0.0;
            for (k, c) in binom.iter().enumerate() {
                inner += c * mean_power(seg.start, seg.end, 2 * k as u32);
            }
            acc.add(seg.len * inner);
        }
        Ok(acc.total().powf(1.0 / p as f64))
    }

    /// Largest `r` with the path in the class of paths that are linear
    /// (constant) on pieces of length at least `r`: the smallest gap between
    /// canonical breakpoints. A piecewise-constant path with a jump at 1
    /// belongs to no such class and gets 0.
    pub fn mesh(&self) -> f64 {
        if self.has_terminal_jump() {
            return 0.0;
        }
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(1.0, f64::min)
    }

    /// Membership in the mesh-`r` class.
    pub fn in_mesh_class(&self, r: f64) -> bool {
        r > 0.0 && r <= self.mesh()
    }

    pub fn has_terminal_jump(&self) -> bool {
        let n = self.values.len();
        self.kind == PathKind::PiecewiseConstant
            && !approx_equal(self.values[n - 1], self.values[n - 2])
    }

    /// Lebesgue measure of `{t : |f(t) - g(t)| >= level}`.
    pub fn excursion_measure(&self, g: &Path, level: f64) -> Result<f64> {
        if level.is_nan() || level < 0.0 {
            return Err(Error::domain(format!("excursion level {level} must be >= 0")));
        }
        let mut acc = NeumaierSum::default();
        for seg in diff_segments(self, Some(g)) {
            let frac = if level == 0.0 {
                1.0
            } else {
                fraction_at_least(seg.start, seg.end, level)
                    + fraction_at_least(-seg.start, -seg.end, level)
            };
            acc.add(seg.len * frac);
        }
        Ok(acc.total().clamp(0.0, 1.0))
    }

    /// Modulus of continuity `sup { |f(t) - f(s)| : |t - s| <= h }` of a
    /// piecewise-linear path, exact.
    pub fn modulus_of_continuity(&self, h: f64) -> Result<f64> {
        if self.kind != PathKind::PiecewiseLinear {
            return Err(Error::domain("modulus of continuity needs a continuous path"));
        }
        if h <= 0.0 {
            return Ok(0.0);
        }
        let b = &self.breakpoints;
        let v = &self.values;
        let mut best = 0.0f64;
        // Vertex pairs inside the band.
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                if b[j] - b[i] > h {
                    break;
                }
                best = best.max((v[j] - v[i]).abs());
            }
        }
        // Band boundary t = s + h crossing grid lines.
        if h < 1.0 {
            for &bp in b {
                for s in [bp, bp - h] {
                    if (0.0..=1.0 - h).contains(&s) {
                        let d = self.eval_unchecked(s + h) - self.eval_unchecked(s);
                        best = best.max(d.abs());
                    }
                }
            }
        } else {
            best = best.max((v[v.len() - 1] - v[0]).abs());
        }
        Ok(best)
    }

    /// Largest window `δ ∈ [0, 1]` with `modulus_of_continuity(δ) <= gap`,
    /// located by bisection from below (the returned value is never too big).
    pub fn continuity_window(&self, gap: f64) -> Result<f64> {
        if self.modulus_of_continuity(1.0)? <= gap {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.modulus_of_continuity(mid)? <= gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `c * f`.
    pub fn scaled(&self, c: f64) -> Path {
        if c == 1.0 {
            return self.clone();
        }
        Path::from_sorted(
            self.kind,
            self.breakpoints.clone(),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    /// `f - g`.
    pub fn sub(&self, other: &Path) -> Result<Path> {
        affine_combine(&[1.0, -1.0], &[self, other], None)
    }

    /// Samples the path on `grid` as `t,value` CSV rows with a header.
    pub fn to_csv(&self, grid: &[f64]) -> Result<String> {
        let mut out = String::from("t,value\n");
        for &t in grid {
            let _ = writeln!(out, "{},{}", t, self.eval(t)?);
        }
        Ok(out)
    }
}

/// `Σ coeffs[i] * paths[i] + shift`, in canonical form.
///
/// All paths (and the shift) must share one kind.
pub fn affine_combine(coeffs: &[f64], paths: &[&Path], shift: Option<&Path>) -> Result<Path> {
    if paths.is_empty() {
        return Err(Error::Empty("affine_combine needs at least one path"));
    }
    if coeffs.len() != paths.len() {
        return Err(Error::domain(format!(
            "{} coefficients for {} paths",
            coeffs.len(),
            paths.len()
        )));
    }
    if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("coefficient {c}")));
    }
    let kind = paths[0].kind;
    if paths.iter().any(|p| p.kind != kind) || shift.is_some_and(|s| s.kind != kind) {
        return Err(Error::MixedKinds);
    }
    let mut all: Vec<&Path> = paths.to_vec();
    all.extend(shift);
    let grid = merged_breakpoints(&all);
    let mut values = vec![0.0; grid.len()];
    for (c, p) in coeffs.iter().zip(paths) {
        if *c == 0.0 {
            continue;
        }
        for (acc, v) in values.iter_mut().zip(p.eval_sorted(&grid)) {
            *acc += c * v;
        }
    }
    if let Some(s) = shift {
        for (acc, v) in values.iter_mut().zip(s.eval_sorted(&grid)) {
            *acc += v;
        }
    }
    Ok(Path::from_sorted(kind, grid, values))
}

/// Union of the breakpoints of `paths`, deduplicated at [`DEDUP_TOL`].
pub fn merged_breakpoints(paths: &[&Path]) -> Vec<f64> {
    let mut acc: Vec<f64> = paths.first().map(|p| p.breakpoints.clone()).unwrap_or_default();
    for p in paths.iter().skip(1) {
        acc = merge_sorted(&acc, &p.breakpoints);
    }
    acc
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let t = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&prev) if t - prev <= DEDUP_TOL => {}
            _ => out.push(t),
        }
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// One merged segment on which `f - g` is affine.
#[derive(Clone, Copy, Debug)]
struct AffineSegment {
    len: f64,
    /// Limit from the right at the left end.
    start: f64,
    /// Limit from the left at the right end.
    end: f64,
}

fn diff_segments(f: &Path, g: Option<&Path>) -> Vec<AffineSegment> {
    let grid = match g {
        Some(g) => merged_breakpoints(&[f, g]),
        None => f.breakpoints.clone(),
    };
    let ends = |p: &Path, a: f64, b: f64| -> (f64, f64) {
        match p.kind {
            PathKind::PiecewiseLinear => (p.eval_unchecked(a), p.eval_unchecked(b)),
            PathKind::PiecewiseConstant => {
                let v = p.eval_unchecked(0.5 * (a + b));
                (v, v)
            }
        }
    };
    grid.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (fs, fe) = ends(f, a, b);
            let (gs, ge) = g.map_or((0.0, 0.0), |g| ends(g, a, b));
            AffineSegment {
                len: b - a,
                start: fs - gs,
                end: fe - ge,
            }
        })
        .collect()
}

/// Mean of `x^k` over `[0, 1]` for `x` affine from `u` to `w`:
/// `(Σ_{j=0}^{k} u^j w^{k-j}) / (k + 1)`, free of the `(w^{k+1}-u^{k+1})/(w-u)`
/// cancellation.
fn mean_power(u: f64, w: f64, k: u32) -> f64 {
    // symmetric in (u, w): expand around the larger magnitude so |ratio| <= 1
    let (big, small) = if u.abs() >= w.abs() { (u, w) } else { (w, u) };
    if big == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let r = small / big;
    let mut sum = 0.0;
    let mut term = big.powi(k as i32);
    for _ in 0..=k {
        sum += term;
        term *= r;
    }
    sum / (k + 1) as f64
}

/// Fraction of `[0, 1]` where the affine function from `u` to `w` is `>= c`.
fn fraction_at_least(u: f64, w: f64, c: f64) -> f64 {
    if u == w {
        return if u >= c { 1.0 } else { 0.0 };
    }
    let root = ((c - u) / (w - u)).clamp(0.0, 1.0);
    if w > u {
        1.0 - root
    } else {
        root
    }
}

fn binomials(q: u32) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for k in 1..=q {
        let prev = row[k as usize - 1];
        row.push(prev * (q - k + 1) as f64 / k as f64);
    }
    row
}

fn check_even(p: u32, min: u32) -> Result<()> {
    if p < min || !p.is_multiple_of(2) {
        return Err(Error::domain(format!("p = {p} must be an even integer >= {min}")));
    }
    Ok(())
}

fn approx_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= CANON_REL_TOL * a.abs().max(b.abs())
}

fn dedup(kind: PathKind, breakpoints: Vec<f64>, values: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut bps: Vec<f64> = Vec::with_capacity(breakpoints.len());
    let mut vals: Vec<f64> = Vec::with_capacity(values.len());
    for (t, v) in breakpoints.into_iter().zip(values) {
        match bps.last() {
            Some(&prev) if t - prev <= DEDUP_TOL => {
                // piecewise-constant keeps the value right of the cluster
                if kind == PathKind::PiecewiseConstant {
                    *vals.last_mut().expect("paired") = v;
                }
            }
            _ => {
                bps.push(t);
                vals.push(v);
            }
        }
    }
    if bps.len() == 1 {
        // degenerate input collapsed onto a single point
        bps.push(1.0);
        vals.push(vals[0]);
    }
    bps[0] = 0.0;
    *bps.last_mut().expect("nonempty") = 1.0;
    (bps, vals)
}

fn canonicalize(kind: PathKind, bps: Vec<f64>, vals: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = bps.len();
    let mut ob: Vec<f64> = Vec::with_capacity(n);
    let mut ov: Vec<f64> = Vec::with_capacity(n);
    match kind {
        PathKind::PiecewiseLinear => {
            for (t, v) in bps.into_iter().zip(vals) {
                while ob.len() >= 2 {
                    let k = ob.len();
                    if collinear((ob[k - 2], ov[k - 2]), (ob[k - 1], ov[k - 1]), (t, v)) {
                        ob.pop();
                        ov.pop();
                    } else {
                        break;
                    }
                }
                ob.push(t);
                ov.push(v);
            }
        }
        PathKind::PiecewiseConstant => {
            for (i, (t, v)) in bps.into_iter().zip(vals).enumerate() {
                let interior = i > 0 && i + 1 < n;
                if interior && approx_equal(v, *ov.last().expect("first pushed")) {
                    continue;
                }
                ob.push(t);
                ov.push(v);
            }
        }
    }
    (ob, ov)
}

fn collinear(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> bool {
    let a = (p1.0 - p0.0) * (p2.1 - p0.1);
    let b = (p2.0 - p0.0) * (p1.1 - p0.1);
    (a - b).abs() <= CANON_REL_TOL * (a.abs() + b.abs())
}

/// Neumaier compensated summation.
#[derive(Default, Clone, Copy, Debug)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }

    pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = NeumaierSum::default();
        values.into_iter().for_each(|x| acc.add(x));
        acc.total()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pl(points: &[(f64, f64)]) -> Path {
        Path::linear(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    fn pc(bps: &[f64], vals: &[f64]) -> Path {
        Path::steps(bps.to_vec(), vals.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(pl(&[(0.0, 0.0), (1.0, 1.0)]).eval(0.5).unwrap(), 0.5);
        assert_eq!(pc(&[0.0, 0.5, 1.0], &[2.0, 3.0]).eval(0.5).unwrap(), 3.0);
        assert_eq!(pl(&[(0.0, 0.0), (0.25, 1.0), (1.0, 0.0)]).eval(0.25).unwrap(), 1.0);
        assert_eq!(pc(&[0.0, 0.5, 1.0], &[2.0, 3.0]).eval(1.0).unwrap(), 3.0);
        assert!(matches!(pl(&[(0.0, 0.0), (1.0, 1.0)]).eval(1.5), Err(Error::Domain(_))));
        assert!(pl(&[(0.0, 0.0), (1.0, 1.0)]).eval(-1e-9).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(pl(&[(0.0, 0.0), (0.5, -2.0), (1.0, 1.0)]).sup_norm(), 2.0);
        assert_eq!(pc(&[0.0, 1.0], &[0.0]).sup_norm(), 0.0);
        assert_eq!(pl(&[(0.0, 1.0), (1.0, 1.0)]).sup_norm(), 1.0);
    }

    #[test]
    fn lp_norm_examples() {
        let one = Path::constant(PathKind::PiecewiseLinear, 1.0);
        for p in [2, 4, 10] {
            assert!(close(one.lp_norm(p).unwrap(), 1.0, 1e-15));
        }
        let ramp = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(close(ramp.lp_norm(4).unwrap(), 0.2f64.powf(0.25), 1e-14));
        let step = pc(&[0.0, 0.5, 1.0], &[0.0, 1.0]);
        assert!(close(step.lp_norm(4).unwrap(), 0.5f64.powf(0.25), 1e-14));
        assert!(ramp.lp_norm(3).is_err());
        assert!(ramp.lp_norm(0).is_err());
    }

    #[test]
    fn psi_examples() {
        let f = pl(&[(0.0, 0.3), (0.4, -1.0), (1.0, 2.0)]);
        assert!(close(f.psi_smooth(&f, 4).unwrap(), 1.0, 1e-15));
        let zero = pl(&[(0.0, 0.0), (1.0, 0.0)]);
        let one = pl(&[(0.0, 1.0), (1.0, 1.0)]);
        assert!(close(zero.psi_smooth(&one, 4).unwrap(), 4f64.powf(0.25), 1e-14));
        let ramp = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        let expect = (28.0f64 / 15.0).powf(0.25);
        assert!(close(ramp.psi_smooth(&zero, 4).unwrap(), expect, 1e-14));
        assert!(ramp.psi_smooth(&zero, 2).is_err());
    }

    #[test]
    fn psi_mixed_kinds() {
        // ramp minus a step at 1/2 with height 1: integrand known in closed form
        let ramp = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        let step = pc(&[0.0, 0.5, 1.0], &[0.0, 1.0]);
        // ∫_0^{1/2} (1+t^2)^2 + ∫_{1/2}^1 (1+(t-1)^2)^2 = 2 ∫_0^{1/2} (1+t^2)^2
        let half: f64 = 0.5 + 2.0 * 0.125 / 3.0 + 0.03125 / 5.0;
        let expect = (2.0 * half).powf(0.25);
        assert!(close(ramp.psi_smooth(&step, 4).unwrap(), expect, 1e-14));
    }

    #[test]
    fn mesh_examples() {
        assert_eq!(pl(&[(0.0, 0.0), (0.25, 1.0), (1.0, 0.0)]).mesh(), 0.25);
        assert_eq!(pl(&[(0.0, 0.0), (1.0, 1.0)]).mesh(), 1.0);
        let p = pc(&[0.0, 1.0 / 3.0, 0.5, 1.0], &[1.0, 2.0, 3.0]);
        assert!(close(p.mesh(), 1.0 / 6.0, 1e-15));
        // redundant breakpoints do not count
        assert_eq!(pl(&[(0.0, 0.0), (0.1, 0.1), (1.0, 1.0)]).mesh(), 1.0);
    }

    #[test]
    fn terminal_jump_has_zero_mesh() {
        let p = Path::from_points(
            PathKind::PiecewiseConstant,
            vec![0.0, 0.5, 1.0],
            vec![0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!(p.has_terminal_jump());
        assert_eq!(p.mesh(), 0.0);
        assert_eq!(p.eval(1.0).unwrap(), 0.0);
        assert_eq!(p.eval(0.999).unwrap(), 1.0);
    }

    #[test]
    fn excursion_examples() {
        let g = pl(&[(0.0, 0.2), (0.7, -0.4), (1.0, 0.0)]);
        assert_eq!(g.excursion_measure(&g, 0.0).unwrap(), 1.0);
        let ramp = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        let zero = Path::zero(PathKind::PiecewiseLinear);
        assert!(close(ramp.excursion_measure(&zero, 0.5).unwrap(), 0.5, 1e-15));
        assert_eq!(zero.excursion_measure(&zero, 0.1).unwrap(), 0.0);
        assert!(zero.excursion_measure(&zero, -0.1).is_err());
        // both tails: |2t - 1| >= 1/2 on [0, 1/4] ∪ [3/4, 1]
        let centered = pl(&[(0.0, -1.0), (1.0, 1.0)]);
        assert!(close(centered.excursion_measure(&zero, 0.5).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn affine_combine_examples() {
        let f = pl(&[(0.0, 0.0), (0.3, 1.0), (1.0, -2.0)]);
        assert_eq!(affine_combine(&[1.0], &[&f], None).unwrap(), f);
        let zero = affine_combine(&[1.0, -1.0], &[&f, &f], None).unwrap();
        assert_eq!(zero, Path::zero(PathKind::PiecewiseLinear));
        let up = pl(&[(0.0, 0.0), (1.0, 2.0)]);
        let down = pl(&[(0.0, 2.0), (1.0, 0.0)]);
        let avg = affine_combine(&[0.5, 0.5], &[&up, &down], None).unwrap();
        assert_eq!(avg, pl(&[(0.0, 1.0), (1.0, 1.0)]));
    }

    #[test]
    fn affine_combine_errors() {
        let f = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        let s = pc(&[0.0, 1.0], &[1.0]);
        assert!(matches!(affine_combine(&[], &[], None), Err(Error::Empty(_))));
        assert!(matches!(affine_combine(&[1.0, 1.0], &[&f, &s], None), Err(Error::MixedKinds)));
        assert!(matches!(affine_combine(&[1.0], &[&f], Some(&s)), Err(Error::MixedKinds)));
    }

    #[test]
    fn affine_combine_keeps_step_jumps() {
        let a = pc(&[0.0, 0.5, 1.0], &[1.0, 2.0]);
        let b = pc(&[0.0, 0.5 + 1e-13, 1.0], &[0.0, 10.0]);
        let c = affine_combine(&[1.0, 1.0], &[&a, &b], None).unwrap();
        assert_eq!(c.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(c.values(), &[1.0, 12.0, 12.0]);
    }

    #[test]
    fn construction_validates_and_canonicalizes() {
        assert!(Path::linear(vec![0.0, 0.5], vec![1.0, 2.0]).is_err());
        assert!(Path::linear(vec![0.0, 0.6, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(Path::linear(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
        assert!(Path::linear(vec![0.0, 1.0], vec![0.0]).is_err());
        let p = Path::linear(vec![0.0, 0.5, 0.5 + 1e-13, 1.0], vec![0.0, 1.0, 7.0, 0.0]).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(p.values(), &[0.0, 1.0, 0.0]);
        let q = pc(&[0.0, 0.25, 0.5, 1.0], &[1.0, 1.0, 2.0]);
        assert_eq!(q.breakpoints(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn sup_distance_matches_difference() {
        let f = pl(&[(0.0, 0.0), (0.3, 1.0), (1.0, -2.0)]);
        let g = pl(&[(0.0, 0.5), (0.6, 0.0), (0.9, 3.0), (1.0, 1.0)]);
        let d = f.sub(&g).unwrap().sup_norm();
        assert!(close(f.sup_distance(&g), d, 1e-15));
        let a = pc(&[0.0, 0.2, 1.0], &[1.0, -1.0]);
        let b = pc(&[0.0, 0.7, 1.0], &[0.5, 3.0]);
        assert!(close(a.sup_distance(&b), a.sub(&b).unwrap().sup_norm(), 1e-15));
        // mixed kinds: ramp vs zero step
        let z = Path::zero(PathKind::PiecewiseConstant);
        let ramp = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(ramp.sup_distance(&z), 1.0);
    }

    #[test]
    fn modulus_and_window() {
        let tent = pl(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]);
        assert!(close(tent.modulus_of_continuity(0.25).unwrap(), 0.5, 1e-15));
        assert!(close(tent.modulus_of_continuity(0.75).unwrap(), 1.0, 1e-15));
        let w = tent.continuity_window(0.5).unwrap();
        assert!(close(w, 0.25, 1e-12) && w <= 0.25);
        assert_eq!(tent.continuity_window(5.0).unwrap(), 1.0);
        assert!(pc(&[0.0, 1.0], &[0.0]).modulus_of_continuity(0.1).is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let f = pl(&[(0.0, 0.0), (0.3, 1.0), (1.0, -2.0)]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"piecewise_linear","breakpoints":[0.0,0.3,1.0],"values":[0.0,1.0,-2.0]}"#
        );
        assert_eq!(serde_json::from_str::<Path>(&s).unwrap(), f);
        let bad = r#"{"kind":"piecewise_linear","breakpoints":[0.0,0.3],"values":[0.0,1.0]}"#;
        assert!(serde_json::from_str::<Path>(bad).is_err());
    }

    #[test]
    fn csv_export() {
        let f = pl(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(f.to_csv(&[0.0, 0.5, 1.0]).unwrap(), "t,value\n0,0\n0.5,0.5\n1,1\n");
        assert!(f.to_csv(&[2.0]).is_err());
    }
}
