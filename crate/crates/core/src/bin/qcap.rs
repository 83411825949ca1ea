use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcap::cli::{exit_code, run, write_outputs, ChannelSpec, Command, RunConfig, EXIT_INVARIANT};

#[derive(Parser)]
#[command(name = "qcap", version, about = "Capacities and potential-capacity bounds of quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Holevo, coherent, private, entanglement-assisted and environment-assisted quantities
    Capacity(Common),
    /// Potential-capacity bounds and the perfection audit
    Potential(Common),
    /// Canonical lifting and the lifted coherent information
    Lift(Common),
    /// Hadamard, entanglement-breaking and degradability tests
    Classify(Common),
    /// Additivity gaps, regularization chains and activation searches
    Additivity(Common),
    /// Equality-case checks on the dilated output state
    Structure(Common),
}

#[derive(Args)]
struct Common {
    /// Channel spec such as `dephasing:0.1` or `custom:kraus.json`; repeatable
    #[arg(long = "channel")]
    channels: Vec<ChannelSpec>,
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV table
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Tolerance for report invariants
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on (joint) input dimensions
    #[arg(long)]
    max_dim: Option<usize>,
}

fn config(command: Command, c: Common) -> qcap::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.command != command {
                return Err(qcap::Error::Config(format!(
                    "{} is a {:?} config, not {command:?}",
                    path.display(),
                    cfg.command
                )));
            }
            cfg
        }
        None => RunConfig::new(command, Vec::new()),
    };
    if !c.channels.is_empty() {
        cfg.channels = c.channels;
    }
    if let Some(s) = c.seed {
        cfg.solver.seed = s;
    }
    if let Some(r) = c.restarts {
        cfg.solver.restarts = r;
    }
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    if let Some(d) = c.max_dim {
        cfg.max_dim = d;
    }
    if c.out.is_some() {
        cfg.out = c.out;
    }
    if c.csv.is_some() {
        cfg.csv = c.csv;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Capacity(c) => (Command::Capacity, c),
        Sub::Potential(c) => (Command::Potential, c),
        Sub::Lift(c) => (Command::Lift, c),
        Sub::Classify(c) => (Command::Classify, c),
        Sub::Additivity(c) => (Command::Additivity, c),
        Sub::Structure(c) => (Command::Structure, c),
    };
    let result = config(command, common).and_then(|cfg| run(&cfg)).and_then(|report| {
        write_outputs(&report)?;
        Ok(report)
    });
    match result {
        Ok(report) if report.violations.is_empty() => ExitCode::SUCCESS,
        Ok(report) => {
            for v in &report.violations {
                eprintln!("invariant violated: {v}");
            }
            ExitCode::from(EXIT_INVARIANT as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
