use std::path::{Path as FsPath, PathBuf};

use contraction_core::checks::{run_criterion, CriterionResult, CRITERIA};
use contraction_core::donsker::experiments::{run_experiment, ExperimentConfig, EXPERIMENTS};

use crate::failure::{line_of_key, Failure, Outcome};
use crate::manifest::{now, write_output, RunManifest};

fn load_config(name: &str, config: Option<&FsPath>, seed: Option<u64>) -> Outcome<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => {
            let file = path.display().to_string();
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::validation(format!("cannot read config: {e}")).in_file(&file))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Failure::json(&e, &file))?;
            cfg.validate(name).map_err(|e| {
                let line = ["n_values", "ensemble_size", "iterations", "block_size", "null_level", "grid"]
                    .iter()
                    .find(|k| e.to_string().contains(*k))
                    .and_then(|k| line_of_key(&text, k));
                Failure::from(e).in_file(&file).at_line(line)
            })?;
            cfg
        }
        None => ExperimentConfig::with_seed(
            seed.ok_or_else(|| Failure::validation("a seed is required: pass --seed or a config file with \"seed\""))?,
        ),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate(name)?;
    Ok(cfg)
}

/// Runs a named experiment and writes `<name>.json`, `<name>.csv` and a manifest.
pub fn run(name: &str, config: Option<&FsPath>, seed: Option<u64>, out: &FsPath) -> Outcome<Vec<PathBuf>> {
    if !EXPERIMENTS.contains(&name) {
        return Err(Failure::validation(format!("unknown experiment '{name}'"))
            .with_hint(format!("available experiments: {}", EXPERIMENTS.join(", "))));
    }
    let started = now();
    let cfg = load_config(name, config, seed)?;
    let report = run_experiment(name, &cfg)?;
    let json_path = write_output(out, &format!("{name}.json"), report.to_json().as_bytes())?;
    let csv_path = write_output(out, &format!("{name}.csv"), report.to_csv().as_bytes())?;
    let mut manifest = RunManifest::new("experiment", Some(cfg.digest()), Some(cfg.seed), started);
    manifest.record(&json_path)?;
    manifest.record(&csv_path)?;
    manifest.finish(out, name)?;
    println!("{}", serde_json::to_string_pretty(&report.summary).expect("serializable"));
    Ok(vec![json_path, csv_path])
}

/// Runs acceptance criteria, prints one line each, and writes `acceptance.json`.
pub fn report(ids: &[u8], out: &FsPath) -> Outcome<Vec<CriterionResult>> {
    let started = now();
    let mut results = Vec::new();
    for &id in ids {
        let r = run_criterion(id)?;
        println!("{r}");
        results.push(r);
    }
    let text = serde_json::to_string_pretty(&results).expect("serializable") + "\n";
    let path = write_output(out, "acceptance.json", text.as_bytes())?;
    let mut manifest = RunManifest::new("report", None, None, started);
    manifest.record(&path)?;
    manifest.finish(out, "acceptance")?;
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        Err(Failure::runtime(format!("criteria failed: {failed:?}")))
    }
}

pub fn all_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.id).collect()
}
