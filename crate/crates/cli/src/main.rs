//! Batch driver: load convex bodies, run the verification pipeline, emit
//! machine- and human-readable reports.
//!
//! Exit codes: 0 all checks passed (skips allowed), 1 at least one check
//! failed, 2 usage or configuration error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{parse_constant, RunConfig};
use output::RunReport;
use specgap::geometry::ConvexBody;
use specgap::pipeline::{run_body, CheckSelection, RunOptions};
use specgap::sampler::sample_uniform;

/// Environment variable that sets the default worker count.
const WORKERS_ENV: &str = "SPECGAP_WORKERS";

#[derive(Parser)]
#[command(
    name = "specgap",
    about = "Certified spectral-gap and Cheeger lower bounds for convex bodies",
    version
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and plot data.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Check groups to run (comma-separated: radial, free-energy, overlap,
    /// bounds, all). Applies to `verify`.
    #[arg(long, global = true)]
    checks: Option<String>,
    /// Uniform samples per body.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Worker thread cap (default: SPECGAP_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Constant overrides, e.g. --constants c_bob=0.5 (repeatable).
    #[arg(long = "constants", value_name = "KEY=VAL", global = true)]
    constants: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial moments and distribution-of-mass checks.
    Stats {
        /// Body description files.
        bodies: Vec<PathBuf>,
        /// Also dump the uniform sample batches (binary f64 + header).
        #[arg(long)]
        dump: bool,
    },
    /// Free-energy curve estimation, oracles and curve checks.
    FreeEnergy { bodies: Vec<PathBuf> },
    /// Entropy/TV overlap at w₀ and the ≤ 1/2 checks.
    Overlap { bodies: Vec<PathBuf> },
    /// Spectral and isoperimetric bounds with sandwich references.
    Bounds { bodies: Vec<PathBuf> },
    /// The full verification suite (every check group).
    Verify { bodies: Vec<PathBuf> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (command_name, body_paths, selection, dump) = match &cli.command {
        Command::Stats { bodies, dump } => (
            "stats",
            bodies.clone(),
            CheckSelection {
                radial: true,
                free_energy: false,
                overlap: false,
                bounds: false,
            },
            *dump,
        ),
        Command::FreeEnergy { bodies } => (
            "free-energy",
            bodies.clone(),
            CheckSelection {
                radial: false,
                free_energy: true,
                overlap: false,
                bounds: false,
            },
            false,
        ),
        Command::Overlap { bodies } => (
            "overlap",
            bodies.clone(),
            CheckSelection {
                radial: false,
                free_energy: false,
                overlap: true,
                bounds: false,
            },
            false,
        ),
        Command::Bounds { bodies } => (
            "bounds",
            bodies.clone(),
            CheckSelection {
                radial: false,
                free_energy: false,
                overlap: false,
                bounds: true,
            },
            false,
        ),
        Command::Verify { bodies } => ("verify", bodies.clone(), CheckSelection::all(), false),
    };

    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };

    let workers = cli.workers.or(config.workers).or_else(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(w) = workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        // Ignore the error when a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }

    let overrides: Vec<(String, f64)> = cli
        .constants
        .iter()
        .map(|s| parse_constant(s))
        .collect::<anyhow::Result<_>>()?;
    let opts = config.build_options(
        cli.seed,
        cli.samples,
        &overrides,
        cli.checks.as_deref(),
        selection,
    )?;

    let mut all_paths = config.bodies.clone();
    all_paths.extend(body_paths);
    if all_paths.is_empty() {
        bail!("no body files given (positional arguments or `bodies` in the config)");
    }
    let bodies = load_bodies(&all_paths)?;

    let out_dir = cli
        .out
        .or(config.out)
        .unwrap_or_else(|| PathBuf::from("out"));

    let started = Instant::now();
    let reports: Vec<_> = bodies
        .par_iter()
        .map(|(name, body)| {
            run_body(name, body, &opts)
                .with_context(|| format!("pipeline failed on body {name}"))
        })
        .collect::<anyhow::Result<_>>()?;
    if dump {
        dump_batches(&bodies, &opts, &out_dir)?;
    }
    let wall = started.elapsed().as_secs_f64();

    let report = RunReport::assemble(
        command_name,
        opts.seed,
        opts.samples,
        opts.constants,
        reports,
        wall,
    );
    report.write_files(&out_dir)?;
    print!("{}", report.render_text());
    println!("report written to {}", out_dir.join("report.json").display());
    Ok(report.passed())
}

fn load_bodies(paths: &[PathBuf]) -> anyhow::Result<Vec<(String, ConvexBody)>> {
    let mut out = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read body file {}", path.display()))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "body".to_string());
        let bodies = specgap::schema::parse_bodies(&text, &stem)
            .with_context(|| format!("invalid body file {}", path.display()))?;
        out.extend(bodies);
    }
    Ok(out)
}

fn dump_batches(
    bodies: &[(String, ConvexBody)],
    opts: &RunOptions,
    out_dir: &std::path::Path,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for (name, body) in bodies {
        let config = opts.sampler_config(body);
        let batch = sample_uniform(body, &config, opts.samples)?;
        batch.dump(&out_dir.join(format!("samples_{name}.f64")))?;
    }
    Ok(())
}
