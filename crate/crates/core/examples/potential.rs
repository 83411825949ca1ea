//! Potential-capacity bounds and the perfection audit.
//!
//! cargo run --example potential -- depolarizing:0.5:2

use qcap::cli::zoo::ChannelSpec;
use qcap::optim::SolverOptions;
use qcap::potential::{activation_witness_qa, potential_suite};

fn main() -> qcap::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "depolarizing:0.5:2".into());
    let ch = spec.parse::<ChannelSpec>()?.build()?;
    let s = potential_suite(&ch, &SolverOptions::default());
    println!("(Q_A)_p       {:.5}", s.qa_p.value);
    println!("chi_p upper   {:.5}", s.chi_p_upper.value);
    println!("Q_p upper     {:.5}", s.qp_upper.value);
    println!("P_p upper     {:.5}", s.pp_upper.value);
    println!("minimax gap   {:.1e}", s.channel_eof.gap);
    let a = &s.audit;
    for (name, line) in [("classical", &a.classical), ("quantum", &a.quantum), ("private", &a.private)] {
        println!("{name:<10} [{:.4}, {:.4}]  {:?}", line.lower, line.upper, line.verdict);
    }
    let w = activation_witness_qa(&ch, &SolverOptions::default());
    println!("Q_A activation with {:?}: {:.5} of {:.5}", w.kind, w.achieved, w.target);
    for v in s.chain_violations(2e-3) {
        println!("violation: {v}");
    }
    Ok(())
}
