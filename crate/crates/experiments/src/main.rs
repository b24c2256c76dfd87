use std::path::PathBuf;
use std::process::ExitCode;

use brox_experiments::config::{ExperimentConfig, Study};
use brox_experiments::{studies, write_results, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brox-exp", version, about = "Monte Carlo studies for Brownian motion in a white-noise environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Polygonal equation identity across time steps.
    Simulate,
    /// Mesh convergence of the polygonal approximation and drift routes.
    Converge,
    /// Local-time moments, chain bounds and bound ratios.
    Moments,
    /// Strong solution from the driving motion versus the constructed path.
    StrongRoundtrip,
    /// Normalized mean inverse scale function at large K.
    MatsumotoYor,
    /// Driving motion versus environment, and its quadratic variation.
    Independence,
    /// Itô formula residual for the scale function.
    ItoCheck,
}

impl From<Command> for Study {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Study::Simulate,
            Command::Converge => Study::Converge,
            Command::Moments => Study::Moments,
            Command::StrongRoundtrip => Study::StrongRoundtrip,
            Command::MatsumotoYor => Study::MatsumotoYor,
            Command::Independence => Study::Independence,
            Command::ItoCheck => Study::ItoCheck,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `results/<study>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Time steps, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    dt: Option<Vec<f64>>,
    /// Partition meshes, comma separated, decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    mesh: Option<Vec<f64>>,
}

fn execute(cli: Cli) -> Result<bool> {
    let study = Study::from(cli.command);
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let c = cli.common;
    cfg.study = Some(study);
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.replicas.is_some() {
        cfg.replicas = c.replicas;
    }
    if c.dt.is_some() {
        cfg.dt = c.dt;
    }
    if c.mesh.is_some() {
        cfg.mesh = c.mesh;
    }
    if c.out.is_some() {
        cfg.out = c.out;
    }
    cfg.validate()?;
    let result = studies::run(study, &cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results").join(study.name()));
    write_results(&result, &dir)?;
    for c in &result.criteria {
        println!("{}", c.line());
    }
    println!("wrote {} ({:.1} s)", dir.display(), result.wall_time_s);
    Ok(result.all_passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
