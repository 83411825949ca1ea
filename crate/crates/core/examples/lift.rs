//! Canonical lifting: a Hadamard channel whose coherent information bounds
//! the potential quantum capacity of the original channel.
//!
//! cargo run --example lift

use qcap::capacities::q1;
use qcap::cli::zoo;
use qcap::optim::SolverOptions;
use qcap::potential::{canonical_lift, channel_eof, is_hadamard};

fn main() -> qcap::Result<()> {
    let opts = SolverOptions::default();
    let ch = zoo::random(2, 2, 3, 11)?;
    let given = canonical_lift(&ch, None)?;
    let e = channel_eof(&ch, &opts);
    let best = canonical_lift(&ch, Some(&e.best_rotation))?;
    println!("q1(N)                 {:.5}", q1(&ch, &opts).value);
    println!("q1(lift, given Kraus) {:.5}", q1(&given.lifted, &opts).value);
    println!("q1(lift, optimal)     {:.5}", q1(&best.lifted, &opts).value);
    println!("E_F(N) min-max        {:.5}  max-min {:.5}", e.min_max, e.max_min);
    println!("lift is Hadamard: {:?}", is_hadamard(&best.lifted).verdict);
    Ok(())
}
