//! Block states saturating S(B) - S(BE) <= G <= E_F, and recovering the
//! block form of a disguised one.
//!
//! cargo run --example structure

use qcap::entanglement::{eof_matrix, g_measure_matrix};
use qcap::linops::{random_pure, random_unitary, rng_from_seed, SystemDims};
use qcap::optim::SolverOptions;
use qcap::structure::{construct_block_state, discover_block_form, entropy_difference, verify_block_form, Block, BlockDecomposition};

fn main() -> qcap::Result<()> {
    let mut rng = rng_from_seed(3);
    let block = |p: f64, rng: &mut _| Block {
        prob: p,
        left_state: qcap::linops::identity(1),
        pure_state: random_pure(&SystemDims::pair(("R", 2), ("E", 2)).unwrap(), rng).density().into_matrix(),
        d_left: 1,
        d_right: 2,
    };
    let mut d = BlockDecomposition::direct(vec![block(0.3, &mut rng), block(0.7, &mut rng)], 2);
    d.embedding = random_unitary(4, &mut rng);
    let rho = construct_block_state(&d)?.into_matrix();

    let opts = SolverOptions::default();
    println!("S(B) - S(BE) {:.6}", entropy_difference(&rho, 4, 2));
    println!("G            {:.6}", g_measure_matrix(&rho, 4, 2, &opts).value);
    println!("E_F          {:.6}", eof_matrix(&rho, 4, 2, &opts).value);
    println!("predicted    {:.6}", d.predicted_entanglement());

    match discover_block_form(&rho, 4, 2, 9) {
        Some(found) => {
            let r = verify_block_form(&rho, &found);
            println!("recovered {} blocks, distance {:.1e}, passed {}", found.blocks.len(), r.distance, r.passed);
        }
        None => println!("no block form found"),
    }
    Ok(())
}
