use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, ValueEnum};
use contraction_core::metrics::bootstrap::draw_indices;
use contraction_core::metrics::{
    fdd_distance, path_lp_distance, per_marginal_bound, zeta_upper_bound, AssignmentMode, DistanceOptions,
    FddSample, SweepRow, SWEEP_HEADER,
};
use contraction_core::{Ensemble, MetricOrder, Seed};
use serde_json::json;

use crate::failure::{Failure, Outcome};
use crate::manifest::{now, write_output, RunManifest};
use crate::simulate::read_ensemble;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum EstimatorArg {
    /// Exact transport between one-dimensional marginals; needs a one-point grid.
    #[value(name = "exact_1d")]
    Exact1d,
    /// Assignment solver: fdd distance with --grid, path sup-norm distance without.
    Assignment,
    /// Sum of exact per-coordinate distances, an upper bound for the fdd distance.
    PerMarginalBound,
    /// Upper bound on the Zolotarev distance of order --p.
    Zeta,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    #[arg(long, value_enum, default_value = "assignment")]
    pub estimator: EstimatorArg,
    /// Order of the distance (or of the Zolotarev metric for --estimator zeta).
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Comma-separated evaluation times in [0, 1].
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Bootstrap resamples for the standard error.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    /// Average the assignment over blocks of this size.
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Draw this many paths with replacement from each file first.
    #[arg(long)]
    pub resample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a CSV row (n, estimator, value, stderr, seed) to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Value of the n column in the CSV row.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, default_value = "distance.json")]
    pub output: String,
}

fn resample(ens: &Ensemble, m: usize, seed: Seed) -> Outcome<Ensemble> {
    let picks = draw_indices(ens.len(), m, &mut seed.rng());
    let paths = picks.into_iter().map(|i| ens.samples()[i].clone()).collect();
    Ok(Ensemble::from_paths(paths, format!("resampled {}", ens.meta().label))?)
}

pub fn run(args: &DistanceArgs, out: &FsPath) -> Outcome<PathBuf> {
    let started = now();
    let mut a = read_ensemble(&args.file_a)?;
    let mut b = read_ensemble(&args.file_b)?;
    if let Some(m) = args.resample {
        if m == 0 {
            return Err(Failure::validation("--resample must be positive"));
        }
        a = resample(&a, m, Seed(args.seed).child(0))?;
        b = resample(&b, m, Seed(args.seed).child(1))?;
    }
    let opts = DistanceOptions {
        mode: match args.chunk {
            Some(block) => AssignmentMode::Chunked { block },
            None => AssignmentMode::Exact,
        },
        bootstrap: args.bootstrap,
        seed: Seed(args.seed).child(2),
        ..Default::default()
    };
    let grid = args.grid.as_deref();
    let distance = match (args.estimator, grid) {
        (EstimatorArg::Exact1d, Some(g)) if g.len() == 1 => fdd_distance(&a, &b, g, args.p, &opts)?,
        (EstimatorArg::Exact1d, _) => {
            return Err(Failure::validation("exact_1d needs one-dimensional inputs: pass --grid with a single time")
                .with_hint("use --estimator assignment for path or multi-point comparisons"))
        }
        (EstimatorArg::Assignment, Some(g)) => fdd_distance(&a, &b, g, args.p, &opts)?,
        (EstimatorArg::Assignment, None) => path_lp_distance(&a, &b, args.p, &opts)?,
        (EstimatorArg::PerMarginalBound, Some(g)) => {
            per_marginal_bound(&FddSample::from_ensemble(&a, g)?, &FddSample::from_ensemble(&b, g)?, args.p)?
        }
        (EstimatorArg::PerMarginalBound, None) => {
            return Err(Failure::validation("per_marginal_bound needs --grid"))
        }
        (EstimatorArg::Zeta, _) => {
            let zeta = zeta_upper_bound(&a, &b, MetricOrder::new(args.p)?, &opts)?;
            let row = SweepRow { n: args.n, estimator: "zeta_upper_bound".into(), value: zeta.value, stderr: None, seed: args.seed };
            return finish(args, out, started, json!(zeta), row);
        }
    };
    let row = distance.row(args.n, args.seed);
    finish(args, out, started, json!(distance), row)
}

fn finish(args: &DistanceArgs, out: &FsPath, started: String, report: serde_json::Value, row: SweepRow) -> Outcome<PathBuf> {
    let text = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    print!("{text}");
    let path = write_output(out, &args.output, text.as_bytes())?;
    let mut manifest = RunManifest::new("distance", None, Some(args.seed), started);
    manifest.record(&path)?;
    if let Some(csv) = &args.csv {
        append_row(csv, &row)?;
    }
    let stem = args.output.strip_suffix(".json").unwrap_or(&args.output);
    manifest.finish(out, stem)?;
    Ok(path)
}

fn append_row(csv: &FsPath, row: &SweepRow) -> Outcome<()> {
    let fail = |e: std::io::Error| Failure::runtime(format!("cannot append to {}: {e}", csv.display()));
    let fresh = !csv.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(csv).map_err(fail)?;
    if fresh {
        writeln!(f, "{SWEEP_HEADER}").map_err(fail)?;
    }
    writeln!(f, "{}", row.to_csv()).map_err(fail)
}
