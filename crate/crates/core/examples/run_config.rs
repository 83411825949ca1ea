//! Drive a run from a JSON configuration, as the `qcap` binary does, and
//! check that a fixed seed reproduces the report.
//!
//! cargo run --example run_config

use qcap::cli::{run, RunConfig};

const CONFIG: &str = r#"{
  "command": "capacity",
  "channels": ["amplitude_damping:0.3", "random:2:2:3:5"],
  "solver": {"restarts": 6, "seed": 42},
  "tol": 0.002
}"#;

fn main() -> qcap::Result<()> {
    let cfg = RunConfig::from_json(CONFIG)?;
    cfg.validate()?;
    let first = run(&cfg)?;
    let second = run(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&first)?);
    println!("reproducible: {}", first.payload()? == second.payload()?);
    Ok(())
}
