//! Encoder and decoder tile plans for a Kodak-sized image, with their
//! coverage proofs.
//!
//!     cargo run --example plan_tiles [height] [width] [patch]

use cps::blocks::build_paper_network;
use cps::pops::{plan_decode, plan_encode, verify_decode_plan, verify_plan};

fn main() -> cps::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("numeric argument"));
    let height = args.next().unwrap_or(512);
    let width = args.next().unwrap_or(768);
    let patch = args.next().unwrap_or(128);
    let net = build_paper_network(192);

    let plan = plan_encode(height, width, patch, &net)?;
    println!("{plan}");
    println!("{}", verify_plan(&plan)?);
    let (rows, cols) = plan.seams();
    println!("seam rows {rows:?}\nseam cols {cols:?}");

    let dec = plan_decode(plan.latent_h, plan.latent_w, patch / plan.rho, &net)?;
    println!(
        "\ndecoder: {}x{} tiles, halo {} latents, crop {} pixels",
        dec.rows, dec.cols, dec.halo, dec.crop
    );
    println!("{}", verify_decode_plan(&dec, &net)?);
    Ok(())
}
