//! Tiling constants of the built-in networks and of a hand-written stack.
//!
//!     cargo run --example receptive_field

use cps::blocks::{build_edrb_network, build_paper_network};
use cps::calculus::{footprint, summarize, LayerSpec};

fn main() -> cps::Result<()> {
    for net in [build_paper_network(192), build_edrb_network(192)] {
        let s = net.summary(Some(128))?;
        println!(
            "{:<14} r={:<3} rho={:<3} two_e={} o={:<3} step(w_p=128)={}",
            net.name,
            s.r,
            s.rho,
            s.two_e,
            s.o,
            s.step.unwrap_or(0)
        );
    }

    let net = build_paper_network(192);
    println!("\nfootprints of the first latents of a 256-pixel row:");
    for j in 0..4 {
        let fp = footprint(&net.g_a, 256, j)?;
        println!(
            "  latent {j}: pixels {}..={} ({} wide)",
            fp.lo,
            fp.hi,
            fp.len()
        );
    }

    // three 3x3 convolutions, the middle one strided
    let stack = [
        LayerSpec::conv(3, 1),
        LayerSpec::conv(3, 2),
        LayerSpec::conv(3, 1),
    ];
    let s = summarize(&stack, None)?;
    println!(
        "\nconv3 / conv3 s2 / conv3: r={} rho={} o={}",
        s.r, s.rho, s.o
    );
    Ok(())
}
