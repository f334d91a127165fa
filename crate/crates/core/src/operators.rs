//! Continuous linear operators on path space.
//!
//! The two time-split operators for `beta > 1` are
//!
//! ```text
//! front(f)(t) = f(beta t)                      for t <= 1/beta,   f(1) afterwards
//! back(f)(t)  = f(0) for t <= 1/beta,          f((beta t - 1)/(beta - 1)) afterwards
//! ```
//!
//! Both are isometries for the sup norm, so every expression built from
//! scalings and splits by composition is a scalar multiple of an isometry and
//! has an exactly known norm. Sums only get the subadditive bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{affine_combine, Path};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorNode", into = "OperatorNode")]
pub enum PathOperator {
    Scale(f64),
    FrontSplit(f64),
    BackSplit(f64),
    /// `outer ∘ inner`.
    Compose(Box<PathOperator>, Box<PathOperator>),
    Sum(Box<PathOperator>, Box<PathOperator>),
}

/// Operator norm together with whether it is exact or only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub exact: bool,
}

impl PathOperator {
    pub fn scale(c: f64) -> Self {
        PathOperator::Scale(c)
    }

    pub fn front_split(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(PathOperator::FrontSplit(beta))
    }

    pub fn back_split(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(PathOperator::BackSplit(beta))
    }

    pub fn compose(outer: PathOperator, inner: PathOperator) -> Self {
        PathOperator::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn sum(left: PathOperator, right: PathOperator) -> Self {
        PathOperator::Sum(Box::new(left), Box::new(right))
    }

    /// `c * op`, folded into a single scale when `op` is already a scale.
    pub fn scaled(c: f64, op: PathOperator) -> Self {
        match op {
            PathOperator::Scale(d) => PathOperator::Scale(c * d),
            other => PathOperator::compose(PathOperator::Scale(c), other),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PathOperator::Scale(c) if !c.is_finite() => {
                Err(Error::NonFinite(format!("scale factor {c}")))
            }
            PathOperator::Scale(_) => Ok(()),
            PathOperator::FrontSplit(b) | PathOperator::BackSplit(b) => check_beta(*b),
            PathOperator::Compose(a, b) | PathOperator::Sum(a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }

    /// Exact image of `f`, in canonical form and of the same kind.
    pub fn apply(&self, f: &Path) -> Path {
        match self {
            PathOperator::Scale(c) => f.scaled(*c),
            PathOperator::FrontSplit(beta) => front_split(*beta, f),
            PathOperator::BackSplit(beta) => back_split(*beta, f),
            PathOperator::Compose(outer, inner) => outer.apply(&inner.apply(f)),
            PathOperator::Sum(a, b) => {
                let (fa, fb) = (a.apply(f), b.apply(f));
                affine_combine(&[1.0, 1.0], &[&fa, &fb], None)
                    .expect("operators preserve the path kind")
            }
        }
    }

    pub fn norm(&self) -> OperatorNorm {
        match self.isometry_multiple() {
            Some(value) => OperatorNorm { value, exact: true },
            None => OperatorNorm {
                value: self.norm_bound(),
                exact: false,
            },
        }
    }

    /// Operator norm value: exact for scalar multiples of isometries,
    /// otherwise the sub-multiplicative / subadditive bound.
    pub fn op_norm(&self) -> f64 {
        self.norm().value
    }

    fn isometry_multiple(&self) -> Option<f64> {
        match self {
            PathOperator::Scale(c) => Some(c.abs()),
            PathOperator::FrontSplit(_) | PathOperator::BackSplit(_) => Some(1.0),
            PathOperator::Compose(a, b) => Some(a.isometry_multiple()? * b.isometry_multiple()?),
            PathOperator::Sum(..) => None,
        }
    }

    fn norm_bound(&self) -> f64 {
        match self {
            PathOperator::Scale(c) => c.abs(),
            PathOperator::FrontSplit(_) | PathOperator::BackSplit(_) => 1.0,
            PathOperator::Compose(a, b) => a.norm_bound() * b.norm_bound(),
            PathOperator::Sum(a, b) => a.norm_bound() + b.norm_bound(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::domain(format!("split parameter beta = {beta} must exceed 1")));
    }
    Ok(())
}

fn front_split(beta: f64, f: &Path) -> Path {
    let n = f.len();
    let mut bps = Vec::with_capacity(n + 1);
    let mut vals = Vec::with_capacity(n + 1);
    for (t, v) in f.breakpoints().iter().zip(f.values()) {
        bps.push(t / beta);
        vals.push(*v);
    }
    let terminal = f.values()[n - 1];
    bps.push(1.0);
    vals.push(terminal);
    Path::from_sorted(f.kind(), bps, vals)
}

fn back_split(beta: f64, f: &Path) -> Path {
    let n = f.len();
    let start = 1.0 / beta;
    let width = 1.0 - start;
    let mut bps = Vec::with_capacity(n + 1);
    let mut vals = Vec::with_capacity(n + 1);
    bps.push(0.0);
    vals.push(f.values()[0]);
    for (t, v) in f.breakpoints().iter().zip(f.values()) {
        bps.push(start + width * t);
        vals.push(*v);
    }
    Path::from_sorted(f.kind(), bps, vals)
}

/// JSON form `{kind, params, children}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct OperatorNode {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default)]
    children: Vec<OperatorNode>,
}

impl From<PathOperator> for OperatorNode {
    fn from(op: PathOperator) -> Self {
        let leaf = |kind: &str, p: f64| OperatorNode {
            kind: kind.into(),
            params: vec![p],
            children: vec![],
        };
        let node = |kind: &str, a: PathOperator, b: PathOperator| OperatorNode {
            kind: kind.into(),
            params: vec![],
            children: vec![a.into(), b.into()],
        };
        match op {
            PathOperator::Scale(c) => leaf("scale", c),
            PathOperator::FrontSplit(b) => leaf("front_split", b),
            PathOperator::BackSplit(b) => leaf("back_split", b),
            PathOperator::Compose(a, b) => node("compose", *a, *b),
            PathOperator::Sum(a, b) => node("sum", *a, *b),
        }
    }
}

impl TryFrom<OperatorNode> for PathOperator {
    type Error = Error;

    fn try_from(node: OperatorNode) -> Result<Self> {
        let arity = |params: usize, children: usize| -> Result<()> {
            if node.params.len() != params || node.children.len() != children {
                return Err(Error::Config(format!(
                    "operator '{}' takes {params} params and {children} children",
                    node.kind
                )));
            }
            Ok(())
        };
        let op = match node.kind.as_str() {
            "scale" => {
                arity(1, 0)?;
                PathOperator::Scale(node.params[0])
            }
            "front_split" => {
                arity(1, 0)?;
                PathOperator::FrontSplit(node.params[0])
            }
            "back_split" => {
                arity(1, 0)?;
                PathOperator::BackSplit(node.params[0])
            }
            "compose" | "sum" => {
                arity(0, 2)?;
                let mut it = node.children.into_iter();
                let a = PathOperator::try_from(it.next().expect("arity checked"))?;
                let b = PathOperator::try_from(it.next().expect("arity checked"))?;
                if node.kind == "compose" {
                    PathOperator::compose(a, b)
                } else {
                    PathOperator::sum(a, b)
                }
            }
            other => return Err(Error::Config(format!("unknown operator kind '{other}'"))),
        };
        op.validate()?;
        Ok(op)
    }
}

/// One draw of the random coefficients of a recursive equation at size `n`:
/// `K` operators, an additive shift (zero when absent) and the `K`
/// subproblem sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDraw {
    pub operators: Vec<PathOperator>,
    #[serde(default)]
    pub shift: Option<Path>,
    pub indices: Vec<usize>,
}

impl CoefficientDraw {
    pub fn new(operators: Vec<PathOperator>, shift: Option<Path>, indices: Vec<usize>) -> Result<Self> {
        if operators.len() != indices.len() || operators.is_empty() {
            return Err(Error::domain(format!(
                "{} operators for {} indices",
                operators.len(),
                indices.len()
            )));
        }
        Ok(CoefficientDraw {
            operators,
            shift,
            indices,
        })
    }

    pub fn branching(&self) -> usize {
        self.operators.len()
    }
}

/// Coefficients of the halving decomposition of the rescaled random walk of
/// length `n`: `K = 2`, sizes `(⌈n/2⌉, ⌊n/2⌋)`, operators
/// `sqrt(⌈n/2⌉/n) front_{n/⌈n/2⌉}` and `sqrt(⌊n/2⌋/n) back_{n/⌈n/2⌉}`, no shift.
pub fn donsker_coefficients(n: usize) -> Result<CoefficientDraw> {
    if n < 2 {
        return Err(Error::domain(format!("halving decomposition needs n >= 2, got {n}")));
    }
    let hi = n.div_ceil(2);
    let lo = n / 2;
    let beta = n as f64 / hi as f64;
    let a1 = PathOperator::scaled((hi as f64 / n as f64).sqrt(), PathOperator::front_split(beta)?);
    let a2 = PathOperator::scaled((lo as f64 / n as f64).sqrt(), PathOperator::back_split(beta)?);
    CoefficientDraw::new(vec![a1, a2], None, vec![hi, lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathKind;

    fn ramp() -> Path {
        Path::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn split_examples() {
        let f = PathOperator::front_split(2.0).unwrap().apply(&ramp());
        assert_eq!(f, Path::linear(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap());
        let b = PathOperator::back_split(2.0).unwrap().apply(&ramp());
        assert_eq!(b, Path::linear(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]).unwrap());
        let g = Path::linear(vec![0.0, 0.3, 1.0], vec![0.2, -1.0, 0.5]).unwrap();
        assert_eq!(PathOperator::scale(1.0).apply(&g), g);
    }

    #[test]
    fn splits_match_pointwise_definition() {
        let g = Path::linear(vec![0.0, 0.3, 0.8, 1.0], vec![0.2, -1.0, 0.7, 0.5]).unwrap();
        for beta in [1.1, 1.5, 2.0, 3.7] {
            let fr = PathOperator::FrontSplit(beta).apply(&g);
            let bk = PathOperator::BackSplit(beta).apply(&g);
            for k in 0..=200 {
                let t = k as f64 / 200.0;
                let ef = if t <= 1.0 / beta { g.eval(beta * t).unwrap() } else { g.eval(1.0).unwrap() };
                let eb = if t <= 1.0 / beta {
                    g.eval(0.0).unwrap()
                } else {
                    g.eval(((beta * t - 1.0) / (beta - 1.0)).min(1.0)).unwrap()
                };
                assert!((fr.eval(t).unwrap() - ef).abs() < 1e-12);
                assert!((bk.eval(t).unwrap() - eb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn splits_on_steps_keep_kind_and_convention() {
        let s = Path::steps(vec![0.0, 0.5, 1.0], vec![1.0, -2.0]).unwrap();
        let fr = PathOperator::FrontSplit(2.0).apply(&s);
        assert_eq!(fr.kind(), PathKind::PiecewiseConstant);
        assert_eq!(fr.breakpoints(), &[0.0, 0.25, 1.0]);
        assert_eq!(fr.values(), &[1.0, -2.0, -2.0]);
        let bk = PathOperator::BackSplit(2.0).apply(&s);
        assert_eq!(bk.breakpoints(), &[0.0, 0.75, 1.0]);
        assert_eq!(bk.eval(0.5).unwrap(), 1.0);
        assert_eq!(bk.eval(0.75).unwrap(), -2.0);
    }

    #[test]
    fn norms() {
        for beta in [1.01, 2.0, 10.0] {
            assert_eq!(PathOperator::FrontSplit(beta).op_norm(), 1.0);
            assert_eq!(PathOperator::BackSplit(beta).op_norm(), 1.0);
        }
        assert_eq!(PathOperator::scale(-0.5).op_norm(), 0.5);
        let c = PathOperator::compose(PathOperator::scale(2.0), PathOperator::FrontSplit(3.0));
        assert_eq!(c.norm(), OperatorNorm { value: 2.0, exact: true });
        let s = PathOperator::sum(PathOperator::FrontSplit(2.0), PathOperator::BackSplit(2.0));
        assert_eq!(s.norm(), OperatorNorm { value: 2.0, exact: false });
    }

    #[test]
    fn beta_must_exceed_one() {
        assert!(PathOperator::front_split(1.0).is_err());
        assert!(PathOperator::back_split(0.5).is_err());
        assert!(PathOperator::front_split(f64::INFINITY).is_err());
    }

    #[test]
    fn donsker_coefficient_examples() {
        let d2 = donsker_coefficients(2).unwrap();
        let h = 0.5f64.sqrt();
        assert_eq!(d2.indices, vec![1, 1]);
        assert_eq!(
            d2.operators,
            vec![
                PathOperator::compose(PathOperator::Scale(h), PathOperator::FrontSplit(2.0)),
                PathOperator::compose(PathOperator::Scale(h), PathOperator::BackSplit(2.0)),
            ]
        );
        let d3 = donsker_coefficients(3).unwrap();
        assert_eq!(d3.indices, vec![2, 1]);
        assert_eq!(
            d3.operators,
            vec![
                PathOperator::compose(PathOperator::Scale((2.0f64 / 3.0).sqrt()), PathOperator::FrontSplit(1.5)),
                PathOperator::compose(PathOperator::Scale((1.0f64 / 3.0).sqrt()), PathOperator::BackSplit(1.5)),
            ]
        );
        assert!((d3.operators[0].op_norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((d3.operators[1].op_norm() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(d3.shift.is_none());
        assert!(donsker_coefficients(1).is_err());
    }

    #[test]
    fn json_shape() {
        let op = PathOperator::compose(PathOperator::Scale(0.5), PathOperator::BackSplit(2.0));
        let s = serde_json::to_string(&op).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"compose","params":[],"children":[{"kind":"scale","params":[0.5],"children":[]},{"kind":"back_split","params":[2.0],"children":[]}]}"#
        );
        assert_eq!(serde_json::from_str::<PathOperator>(&s).unwrap(), op);
        assert!(serde_json::from_str::<PathOperator>(r#"{"kind":"front_split","params":[0.9]}"#).is_err());
        assert!(serde_json::from_str::<PathOperator>(r#"{"kind":"rotate","params":[1]}"#).is_err());
    }
}
