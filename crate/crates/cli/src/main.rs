use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sublin_cli::{run_experiment, ExperimentSpec};
use sublin_core::fit::fit_exponent;
use sublin_core::gen::{generate_metric, generate_set_system, MetricKind, SetKind};
use sublin_core::oracle::io;

#[derive(Parser)]
#[command(name = "sublin", version, about = "Sublinear estimator bench harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a set system instance file
    GenSets(GenSetsArgs),
    /// Generate a metric instance file
    GenMetric(GenMetricArgs),
    /// Run an experiment spec
    Run(RunArgs),
    /// Fit a log-log slope on two CSV columns
    Fit(FitArgs),
}

#[derive(Args)]
struct GenSetsArgs {
    /// uniform_random | planted_cover | singleton_heavy | pairs_and_triples | dense_and_sparse
    #[arg(long)]
    kind: String,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// inclusion probability for uniform_random
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    cover_size: usize,
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value_t = 4)]
    dense_sets: usize,
    #[arg(long, default_value_t = 0.6)]
    dense_p: f64,
    #[arg(long, default_value_t = 8.0)]
    sparse_mean: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenMetricArgs {
    /// euclidean | random_closure
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n_pts: usize,
    #[arg(long, default_value_t = 0.5)]
    terminal_fraction: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// experiment spec file (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// output directory for reports and the aggregate CSV
    #[arg(long)]
    out: PathBuf,
    /// replace the spec's seed list with this single seed
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads for the run sweep (0 = default)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// exit with code 2 if any run fails its assertion
    #[arg(long, default_value_t = false)]
    assert: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x_col: String,
    #[arg(long)]
    y_col: String,
    /// divide y by ln(x)^3 before fitting
    #[arg(long, default_value_t = false)]
    deflate: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::GenSets(args) => {
            let kind = parse_set_kind(&args)?;
            let g = generate_set_system(&kind, args.k, args.n, args.seed)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            io::save_set_system(&g.system, &args.out).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "wrote {} (k={}, n={}, planted_cover_upper={:?})",
                args.out.display(),
                args.k,
                args.n,
                g.planted_cover_upper
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::GenMetric(args) => {
            let kind = match args.kind.as_str() {
                "euclidean" => MetricKind::Euclidean { dim: args.dim },
                "random_closure" => MetricKind::RandomClosure,
                other => anyhow::bail!("unknown metric kind {other}"),
            };
            let m = generate_metric(&kind, args.n_pts, args.terminal_fraction, args.seed)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            io::save_metric(&m, &args.out).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "wrote {} (n={}, |T|={})",
                args.out.display(),
                m.n_points(),
                m.terminals().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            #[cfg(feature = "parallel")]
            if args.jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(args.jobs)
                    .build_global()
                    .context("configuring worker pool")?;
            }
            let mut spec = ExperimentSpec::load(&args.spec)?;
            if let Some(seed) = args.seed {
                spec.seeds = vec![seed];
            }
            let outcome = run_experiment(&spec, &args.out)?;
            println!(
                "{} runs -> {} ({} assertion failures)",
                outcome.rows.len(),
                outcome.csv_path.display(),
                outcome.failures
            );
            if args.assert && outcome.failures > 0 {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit(args) => {
            let (xs, ys) = read_columns(&args.csv, &args.x_col, &args.y_col)?;
            let fit = fit_exponent(&xs, &ys, args.deflate).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_set_kind(args: &GenSetsArgs) -> Result<SetKind> {
    Ok(match args.kind.as_str() {
        "uniform_random" => SetKind::UniformRandom { p: args.p },
        "planted_cover" => SetKind::PlantedCover {
            cover_size: args.cover_size,
            overlap: args.overlap,
        },
        "singleton_heavy" => SetKind::SingletonHeavy,
        "pairs_and_triples" => SetKind::PairsAndTriples,
        "dense_and_sparse" => SetKind::DenseAndSparse {
            dense_sets: args.dense_sets,
            dense_p: args.dense_p,
            sparse_mean: args.sparse_mean,
        },
        other => anyhow::bail!("unknown set kind {other}"),
    })
}

fn read_columns(path: &PathBuf, x_col: &str, y_col: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let xi = headers
        .iter()
        .position(|h| h == x_col)
        .with_context(|| format!("column {x_col} not found"))?;
    let yi = headers
        .iter()
        .position(|h| h == y_col)
        .with_context(|| format!("column {y_col} not found"))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in rdr.records() {
        let r = record?;
        xs.push(r[xi].parse::<f64>()?);
        ys.push(r[yi].parse::<f64>()?);
    }
    Ok((xs, ys))
}
