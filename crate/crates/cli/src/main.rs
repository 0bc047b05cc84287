//! `grushin`: runs the verification suites and writes CSV/JSON reports.

mod config;
mod jobs;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;

use config::{Params, RunConfig, Threads};
use report::Output;

#[derive(Debug, Parser)]
#[command(
    name = "grushin",
    version,
    about = "Numerical checks for the Grushin operator on the sphere"
)]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "output-dir", global = true)]
    output_dir: Option<PathBuf>,
    /// Thread count or "auto"; GRUSHIN_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<Threads>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate the configuration and print the estimated work without computing.
    #[arg(long = "dry-run", global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Option<Group>,
}

macro_rules! leaves {
    ($name:ident { $($(#[$doc:meta])* $variant:ident),* $(,)? }) => {
        #[derive(Debug, Subcommand)]
        enum $name {
            $($(#[$doc])* $variant(Params)),*
        }

        impl $name {
            fn into_params(self) -> Params {
                match self {
                    $(Self::$variant(p) => p),*
                }
            }
        }
    };
}

leaves!(VerifyCmd {
    /// Addition theorem residual on a 513-point grid.
    Addition,
    /// Gram matrix residual of the profiles.
    Orthonormality,
    /// Parity symmetry of the profiles.
    Parity,
    /// Weighted commutation inequality on fixed and random coefficients.
    Lemma25,
    /// Sum versus integral bound for log-Lipschitz weights.
    Lemma41,
    /// Weighted ball-volume ratio and its refinement stability.
    Weights,
});

leaves!(ScanCmd {
    /// Sup ratios of an envelope family over dyadic degree blocks.
    Envelope,
    /// Plancherel sums over the high index range.
    PlancherelHigh,
    /// Plancherel sums over the low index range.
    PlancherelLow,
});

leaves!(SweepCmd {
    /// Weighted L2 norm of the heat kernel across scales.
    Heat,
    /// L1 operator norm of Bochner-Riesz means across radii.
    BochnerRiesz,
    /// Mihlin-Hormander ratio for a unit-supported multiplier.
    Mihlin,
    /// One triple norm (with --multiplier) or the weighted Plancherel sweep.
    TripleNorm,
});

leaves!(DistanceCmd {
    /// Eikonal versus model distance on random pairs.
    Pairs,
    /// Log-log slope of ball volumes.
    Volume,
});

#[derive(Debug, Subcommand)]
enum Group {
    /// Evaluate one normalized profile.
    Eval(Params),
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Scan(ScanCmd),
    #[command(subcommand)]
    Sweep(SweepCmd),
    #[command(subcommand)]
    Distance(DistanceCmd),
}

impl Group {
    fn into_params(self) -> Params {
        match self {
            Group::Eval(p) => p,
            Group::Verify(c) => c.into_params(),
            Group::Scan(c) => c.into_params(),
            Group::Sweep(c) => c.into_params(),
            Group::Distance(c) => c.into_params(),
        }
    }
}

fn command_path(matches: &ArgMatches) -> Option<String> {
    let (group, sub) = matches.subcommand()?;
    Some(match sub.subcommand_name() {
        Some(leaf) => format!("{group} {leaf}"),
        None => group.to_owned(),
    })
}

/// Config file first, then command-line flags on top.
fn resolve(cli: Cli, path: Option<String>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(path) = path {
        cfg.command = path;
    }
    if cli.output_dir.is_some() {
        cfg.output_dir = cli.output_dir;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(group) = cli.command {
        cfg.params.overlay(&group.into_params());
    }
    Ok(cfg)
}

enum Outcome {
    Pass,
    Fail,
}

fn run(cli: Cli, path: Option<String>) -> Result<Outcome> {
    let dry_run = cli.dry_run;
    let cfg = resolve(cli, path)?;
    let job = jobs::plan(&cfg)?;
    let threads = cfg.thread_budget()?;
    if dry_run {
        let v = json!({"command": cfg.command, "valid": true, "work_units": job.work_units()?, "threads": threads});
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(Outcome::Pass);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match threads {
            Threads::Auto => 0,
            Threads::Fixed(n) => n,
        })
        .build()
        .context("cannot start the thread pool")?;
    let stem = cfg.command.split_whitespace().collect::<Vec<_>>().join("_");
    let mut out = Output::new(&cfg.output_dir(), &stem)?;
    let start = Instant::now();
    let (summary, pass) = pool.install(|| job.execute(&mut out))?;
    let manifest = json!({
        "config": cfg,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": pool.current_num_threads(),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "pass": pass,
        "outputs": out.written(),
    });
    out.json("manifest", &manifest)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let path = command_path(&matches);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli, path) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
