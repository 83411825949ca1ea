//! Structural tests: entanglement breaking, Hadamard, degradable.
//!
//! cargo run --example classify

use qcap::cli::zoo::ChannelSpec;
use qcap::optim::SolverOptions;
use qcap::potential::{is_degradable, is_entanglement_breaking, is_hadamard};

fn main() -> qcap::Result<()> {
    let opts = SolverOptions::default();
    for spec in ["full_dephasing:2", "measure_prepare:x", "amplitude_damping:0.3", "amplitude_damping:0.7", "depolarizing:0.9:2"] {
        let ch = spec.parse::<ChannelSpec>()?.build()?;
        let d = is_degradable(&ch, &opts);
        println!(
            "{spec:<24} EB {:?}  Hadamard {:?}  degradable {:?} (residual {:.1e}, {:?})",
            is_entanglement_breaking(&ch).verdict,
            is_hadamard(&ch).verdict,
            d.verdict,
            d.residual,
            d.method
        );
    }
    Ok(())
}
