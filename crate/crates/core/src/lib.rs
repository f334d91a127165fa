//! Path-space contraction method workbench.

pub mod checks;
pub mod donsker;
pub mod ensemble;
pub mod error;
pub mod metric_order;
pub mod metrics;
pub mod operators;
pub mod oracle;
pub mod path;
pub mod recursion;
pub mod seed;

pub use ensemble::{Ensemble, EnsembleMeta, PathSampler};
pub use error::{Error, Result};
pub use metric_order::MetricOrder;
pub use operators::{CoefficientDraw, OperatorNorm, PathOperator};
pub use path::{affine_combine, Path, PathKind};
pub use recursion::{FixedPointMap, RecursionSpec, SampleOptions, SampleStats};
pub use seed::{Seed, SimRng};
