//! Additivity gaps for tensor products and a small activation search.
//!
//! cargo run --example additivity

use qcap::additivity::{activation_search, additivity_gap, default_aux_family, write_gap_csv};
use qcap::capacities::Quantity;
use qcap::cli::zoo;
use qcap::optim::SolverOptions;

fn main() -> qcap::Result<()> {
    let opts = SolverOptions::default().with_restarts(8);
    let a = zoo::dephasing(0.1)?;
    let mut records = Vec::new();
    for b in [zoo::amplitude_damping(0.3)?, zoo::random(2, 2, 3, 4)?] {
        for q in [Quantity::Q1, Quantity::P1] {
            records.push(additivity_gap(q, &a, &b, &opts, 16)?);
        }
    }
    write_gap_csv(&records, std::io::stdout())?;

    let family = default_aux_family(&[2], 3, 1);
    let act = activation_search(Quantity::Q1, &zoo::erasure(0.6, 2)?, &family, &opts, 16)?;
    println!("largest q1 activation of erasure(0.6): {:.2e} with {}", act.best_activation, act.best_aux);
    Ok(())
}
