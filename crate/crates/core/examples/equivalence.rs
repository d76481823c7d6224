//! Tiled and whole-image paths agree bit for bit; shrinking the overlap by
//! one scale step breaks that.
//!
//!     cargo run --release --example equivalence

use cps::blocks::{build_paper_network, init_weights};
use cps::codec::{
    analyze_full, analyze_tiled, decode_full, decode_tiled, encode_full, encode_tiled,
    EncodeOptions,
};
use cps::image::Image;
use cps::pops::plan_encode_with_deficit;

fn main() -> cps::Result<()> {
    let net = build_paper_network(8);
    let weights = init_weights(&net, 1);
    let image = Image::synthetic(320, 256, 7)?;
    let opts = EncodeOptions::default();

    let tiled = encode_tiled(&image, &net, &weights, &opts)?;
    let full = encode_full(&image, &net, &weights, &opts)?;
    println!(
        "latents identical:    {}",
        tiled.latent.bit_eq(&full.latent)
    );
    println!(
        "bitstreams identical: {}",
        tiled.bitstream.to_bytes() == full.bitstream.to_bytes()
    );
    let a = decode_tiled(&tiled.bitstream, &net, &weights, 0)?;
    let b = decode_full(&full.bitstream, &net, &weights, 0)?;
    println!("images identical:     {}", a.image == b.image);

    let rho = net.rho_enc();
    let plan = plan_encode_with_deficit(256, 320, 128, &net, rho)?;
    let (short, _) = analyze_tiled(&image, &plan, &net, &weights, 0)?;
    let (reference, _) = analyze_full(&image, &net, &weights, 0)?;
    match short.first_difference(&reference) {
        Some((_, c, y, x)) => {
            println!("overlap o - {rho}: first wrong latent at channel {c}, ({y}, {x})")
        }
        None => println!("overlap o - {rho}: no difference on this input"),
    }
    Ok(())
}
