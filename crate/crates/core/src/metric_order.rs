use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness order `s = m + alpha` with `m = ⌈s⌉ - 1` and `alpha ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MetricOrder {
    s: f64,
}

impl MetricOrder {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 3.0) {
            return Err(Error::domain(format!("metric order s = {s} outside (0, 3]")));
        }
        Ok(MetricOrder { s })
    }

    pub fn s(self) -> f64 {
        self.s
    }

    pub fn m(self) -> u32 {
        (self.s.ceil() as u32).saturating_sub(1)
    }

    pub fn alpha(self) -> f64 {
        self.s - self.m() as f64
    }
}

impl TryFrom<f64> for MetricOrder {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        MetricOrder::new(s)
    }
}

impl From<MetricOrder> for f64 {
    fn from(o: MetricOrder) -> f64 {
        o.s
    }
}
