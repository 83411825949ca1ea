//! Holevo quantity two ways: ensemble optimization and the MSW
//! (min-entropy of the complementary channel) formulation.
//!
//! cargo run --example msw

use qcap::capacities::{holevo_capacity, msw_chi};
use qcap::cli::zoo;
use qcap::optim::SolverOptions;

fn main() -> qcap::Result<()> {
    let opts = SolverOptions::default();
    for seed in 0..5 {
        let ch = zoo::random(2, 2, 3, seed)?;
        let chi = holevo_capacity(&ch, &opts).value;
        let msw = msw_chi(&ch, &opts).value;
        println!("random seed {seed}: chi = {chi:.6}  msw = {msw:.6}  |diff| = {:.1e}", (chi - msw).abs());
    }
    Ok(())
}
