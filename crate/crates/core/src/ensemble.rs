//! Finite path ensembles and their JSON-lines persistence.
//!
//! File layout: the first line is `{"header": {...}}` with label, seed, spec
//! digest, kind and size; every following line is one path object.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{Path, PathKind};
use crate::seed::SimRng;

/// Something that can draw one random path.
pub trait PathSampler: Send + Sync {
    fn kind(&self) -> PathKind;
    fn sample(&self, rng: &mut SimRng) -> Path;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub label: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec_digest: Option<String>,
}

/// Empirical measure on path space: a nonempty multiset of same-kind paths.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    samples: Vec<Path>,
    meta: EnsembleMeta,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

#[derive(Serialize, Deserialize)]
struct Header {
    label: String,
    seed: Option<u64>,
    spec_digest: Option<String>,
    kind: PathKind,
    size: usize,
}

impl Ensemble {
    pub fn new(samples: Vec<Path>, meta: EnsembleMeta) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("ensemble has no samples"))?;
        let kind = first.kind();
        if samples.iter().any(|p| p.kind() != kind) {
            return Err(Error::MixedKinds);
        }
        Ok(Ensemble { samples, meta })
    }

    pub fn from_paths(samples: Vec<Path>, label: impl Into<String>) -> Result<Self> {
        Self::new(
            samples,
            EnsembleMeta {
                label: label.into(),
                ..Default::default()
            },
        )
    }

    pub fn samples(&self) -> &[Path] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Path> {
        self.samples
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut EnsembleMeta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn kind(&self) -> PathKind {
        self.samples[0].kind()
    }

    /// Values of every sample at `times`, row-major `len() x times.len()`.
    pub fn project(&self, times: &[f64]) -> Result<Vec<f64>> {
        check_times(times)?;
        let sorted = times.windows(2).all(|w| w[0] <= w[1]);
        let mut out = Vec::with_capacity(self.samples.len() * times.len());
        for p in &self.samples {
            if sorted {
                out.extend(p.eval_sorted(times));
            } else {
                out.extend(times.iter().map(|&t| p.eval_unchecked(t)));
            }
        }
        Ok(out)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = HeaderLine {
            header: Header {
                label: self.meta.label.clone(),
                seed: self.meta.seed,
                spec_digest: self.meta.spec_digest.clone(),
                kind: self.kind(),
                size: self.len(),
            },
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for p in &self.samples {
            serde_json::to_writer(&mut w, p)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or(Error::Empty("ensemble file is empty"))??;
        let header: HeaderLine = serde_json::from_str(&first)?;
        let mut samples = Vec::with_capacity(header.header.size);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Path = serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 2)))?;
            samples.push(p);
        }
        if samples.len() != header.header.size {
            return Err(Error::Config(format!(
                "header announces {} paths, file holds {}",
                header.header.size,
                samples.len()
            )));
        }
        if samples.first().is_some_and(|p| p.kind() != header.header.kind) {
            return Err(Error::MixedKinds);
        }
        Ensemble::new(
            samples,
            EnsembleMeta {
                label: header.header.label,
                seed: header.header.seed,
                spec_digest: header.header.spec_digest,
            },
        )
    }
}

/// Uniform draw from the samples.
impl PathSampler for Ensemble {
    fn kind(&self) -> PathKind {
        Ensemble::kind(self)
    }

    fn sample(&self, rng: &mut SimRng) -> Path {
        self.samples[rng.random_range(0..self.samples.len())].clone()
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Empty("time grid"));
    }
    if let Some(t) = times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::domain(format!("grid time {t} outside [0, 1]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;

    fn sample_ensemble() -> Ensemble {
        let a = Path::linear(vec![0.0, 0.5, 1.0], vec![0.0, 0.3, -0.1]).unwrap();
        let b = Path::linear(vec![0.0, 1.0], vec![0.0, 1.0 / 3.0]).unwrap();
        let mut e = Ensemble::from_paths(vec![a, b], "demo").unwrap();
        e.meta_mut().seed = Some(11);
        e
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let e = sample_ensemble();
        let mut buf = Vec::new();
        e.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"header":{"label":"demo","seed":11,"spec_digest":null,"kind":"piecewise_linear","size":2}}"#));
        let back = Ensemble::read_jsonl(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn rejects_bad_files() {
        let bad = "{\"header\":{\"label\":\"x\",\"seed\":null,\"spec_digest\":null,\"kind\":\"piecewise_linear\",\"size\":2}}\n{\"kind\":\"piecewise_linear\",\"breakpoints\":[0.0,1.0],\"values\":[0.0,1.0]}\n";
        assert!(Ensemble::read_jsonl(std::io::Cursor::new(bad)).is_err());
        assert!(Ensemble::read_jsonl(std::io::Cursor::new("")).is_err());
    }

    #[test]
    fn homogeneous_and_nonempty() {
        assert!(Ensemble::from_paths(vec![], "x").is_err());
        let a = Path::zero(PathKind::PiecewiseLinear);
        let b = Path::zero(PathKind::PiecewiseConstant);
        assert!(matches!(Ensemble::from_paths(vec![a, b], "x"), Err(Error::MixedKinds)));
    }

    #[test]
    fn projection_and_resampling() {
        let e = sample_ensemble();
        let m = e.project(&[0.5, 1.0]).unwrap();
        assert_eq!(m.len(), 4);
        assert!((m[0] - 0.3).abs() < 1e-15 && (m[3] - 1.0 / 3.0).abs() < 1e-15);
        assert!(e.project(&[1.5]).is_err());
        let mut rng = Seed(3).rng();
        for _ in 0..20 {
            let p = e.sample(&mut rng);
            assert!(e.samples().contains(&p));
        }
    }
}
