//! Deterministic weight initialization and the CPSW weight file.
//!
//!     cargo run --example weights

use cps::blocks::{build_paper_network, init_weights, WeightStore};

fn main() -> cps::Result<()> {
    let net = build_paper_network(192);
    let weights = init_weights(&net, 0);
    let params: usize = weights.iter().map(|(_, p)| p.tensor.dims().len()).sum();
    println!("{} tensors, {params} parameters", weights.len());
    println!(
        "spec hash {:016x}, weights hash {:016x}",
        net.spec_hash(),
        weights.hash()
    );

    let path = std::env::temp_dir().join("cps-example-weights.cpsw");
    weights.save(&path)?;
    let loaded = WeightStore::load(&path, &net)?;
    println!(
        "reloaded from {}: identical = {}",
        path.display(),
        loaded == weights
    );
    std::fs::remove_file(&path)?;

    for (name, p) in weights.iter().take(4) {
        println!("  {name:<20} {:?}", p.shape());
    }
    Ok(())
}
