//! Build a channel from Kraus operators, save it in the JSON channel format
//! and load it back the way `custom:<path>` specs do.
//!
//! cargo run --example custom_channel

use qcap::capacities::q1;
use qcap::channels::KrausChannel;
use qcap::cli::zoo::ChannelSpec;
use qcap::linops::{c, cr, ComplexMatrix};
use qcap::optim::SolverOptions;

fn main() -> qcap::Result<()> {
    // phase damping with an extra rotation
    let l: f64 = 0.4;
    let k0 = ComplexMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), c(0.0, (1.0 - l).sqrt())]);
    let k1 = ComplexMatrix::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(l.sqrt())]);
    let ch = KrausChannel::new(vec![k0, k1], Some("twisted phase damping".into()))?;

    let dir = std::env::temp_dir().join("qcap_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("channel.json");
    std::fs::write(&path, serde_json::to_string_pretty(&ch)?)?;

    let spec: ChannelSpec = format!("custom:{}", path.display()).parse()?;
    let back = spec.build()?;
    println!("loaded {} ({} -> {}, {} Kraus operators)", back.label(), back.d_in, back.d_out, back.num_kraus());
    println!("q1 = {:.5}", q1(&back, &SolverOptions::default()).value);
    Ok(())
}
