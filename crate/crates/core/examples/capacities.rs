//! One-shot capacities of a few standard qubit channels.
//!
//! cargo run --example capacities

use qcap::capacities::capacity_suite;
use qcap::cli::zoo;
use qcap::optim::SolverOptions;

fn main() -> qcap::Result<()> {
    let opts = SolverOptions::default().with_seed(7);
    for spec in ["identity:2", "dephasing:0.1", "depolarizing:0.5:2", "amplitude_damping:0.3", "erasure:0.25:2"] {
        let ch = spec.parse::<zoo::ChannelSpec>()?.build()?;
        let suite = capacity_suite(&ch, &opts);
        print!("{spec:<24}");
        for r in suite.reports() {
            print!("  {}={:.4}", r.quantity.name(), r.value);
        }
        println!();
    }
    Ok(())
}
