use std::fs::File;
use std::io::BufReader;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use contraction_core::donsker::{donsker_spec, IncrementLaw, Interpolation};
use contraction_core::recursion::{canonical_digest, sample_ensemble, IndexRule, RuleSampler};
use contraction_core::{Ensemble, Path, PathOperator, PathSampler, RecursionSpec, SampleOptions, Seed};
use serde::{Deserialize, Serialize};

use crate::failure::{line_of_key, Failure, Outcome};
use crate::manifest::{now, write_output, RunManifest};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub n: usize,
    pub ensemble_size: usize,
    pub model: Model,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_output")]
    pub output: String,
}

fn default_output() -> String {
    "ensemble.jsonl".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    Donsker {
        #[serde(default = "rademacher")]
        increment: IncrementLaw,
        #[serde(default = "linear")]
        interpolation: Interpolation,
    },
    Custom {
        k: usize,
        n0: usize,
        operators: Vec<PathOperator>,
        #[serde(default)]
        shift: Option<Path>,
        index_rule: IndexRule,
        /// Laws of `X_0, …, X_{n0-1}`.
        base: Vec<BaseLaw>,
    },
}

fn rademacher() -> IncrementLaw {
    IncrementLaw::Rademacher
}

fn linear() -> Interpolation {
    Interpolation::Linear
}

/// A base law: uniform draw from an ensemble file or a fixed path.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseLaw {
    File { file: PathBuf },
    Path { path: Path },
}

pub fn read_ensemble(path: &FsPath) -> Outcome<Ensemble> {
    let file = File::open(path).map_err(|e| Failure::validation(format!("cannot open {}: {e}", path.display())))?;
    Ensemble::read_jsonl(BufReader::new(file)).map_err(|e| Failure::from(e).in_file(path.display().to_string()))
}

impl SimulateConfig {
    pub fn parse(text: &str, file: &str) -> Outcome<Self> {
        let config: SimulateConfig = serde_json::from_str(text).map_err(|e| Failure::json(&e, file))?;
        let invalid = |key: &str, msg: String| Failure::validation(msg).in_file(file).at_line(line_of_key(text, key));
        if config.ensemble_size == 0 {
            return Err(invalid("ensemble_size", "ensemble_size must be at least 1".into()));
        }
        if let Model::Custom { k, n0, operators, base, .. } = &config.model {
            if *n0 == 0 {
                return Err(invalid("n0", "n0 must be at least 1".into()));
            }
            if *k == 0 || operators.len() != *k {
                return Err(invalid("operators", format!("k = {k} needs exactly k operators, got {}", operators.len())));
            }
            if base.len() != *n0 {
                return Err(invalid("base", format!("n0 = {n0} needs {n0} base laws, got {}", base.len())));
            }
        }
        Ok(config)
    }

    /// Canonical digest of the config with defaults filled in.
    pub fn digest(&self) -> String {
        canonical_digest(&serde_json::to_value(self).expect("serializable"))
    }

    pub fn spec(&self, config_dir: &FsPath) -> Outcome<RecursionSpec> {
        match &self.model {
            Model::Donsker { increment, interpolation } => Ok(donsker_spec(increment, *interpolation)?),
            Model::Custom { k, n0, operators, shift, index_rule, base } => {
                for op in operators {
                    op.validate()?;
                }
                let base = base
                    .iter()
                    .map(|b| -> Outcome<Arc<dyn PathSampler>> {
                        let ens = match b {
                            BaseLaw::File { file } => read_ensemble(&config_dir.join(file))?,
                            BaseLaw::Path { path } => Ensemble::from_paths(vec![path.clone()], "fixed")?,
                        };
                        Ok(Arc::new(ens))
                    })
                    .collect::<Outcome<Vec<_>>>()?;
                let sampler = RuleSampler { operators: operators.clone(), shift: shift.clone(), rule: index_rule.clone() };
                let description = serde_json::to_value(&self.model).expect("serializable");
                Ok(RecursionSpec::new(*k, *n0, base, Arc::new(sampler), description)?)
            }
        }
    }
}

pub fn run(config_path: &FsPath, out: &FsPath) -> Outcome<PathBuf> {
    let started = now();
    let file = config_path.display().to_string();
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::validation(format!("cannot read config: {e}")).in_file(&file))?;
    let config = SimulateConfig::parse(&text, &file)?;
    let spec = config.spec(config_path.parent().unwrap_or(FsPath::new(".")))?;
    let options = SampleOptions { max_depth: config.max_depth };
    let (ens, stats) = sample_ensemble(&spec, config.n, config.ensemble_size, Seed(config.seed), options)?;
    if stats.rejections > 0 {
        eprintln!("note: {} coefficient draws with an index equal to n were rejected", stats.rejections);
    }
    let mut bytes = Vec::new();
    ens.write_jsonl(&mut bytes)?;
    let path = write_output(out, &config.output, &bytes)?;
    let mut manifest = RunManifest::new("simulate", Some(config.digest()), Some(config.seed), started);
    manifest.record(&path)?;
    let stem = config.output.strip_suffix(".jsonl").unwrap_or(&config.output);
    manifest.finish(out, stem)?;
    Ok(path)
}
