//! Analysis-stage tensor memory of the tiled and whole-image encoders as
//! the image grows.
//!
//!     cargo run --release --example memory_trend

use cps::blocks::{build_paper_network, init_weights};
use cps::codec::{analyze_full, analyze_tiled};
use cps::image::Image;
use cps::pops::plan_encode;

fn main() -> cps::Result<()> {
    let net = build_paper_network(8);
    let weights = init_weights(&net, 0);
    let mib = |b: usize| b as f64 / (1 << 20) as f64;
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "side", "tiled MiB", "latent MiB", "full MiB"
    );
    for side in [256, 512, 1024, 2048] {
        let image = Image::synthetic(side, side, 0)?;
        let plan = plan_encode(side, side, 128, &net)?;
        let (_, t) = analyze_tiled(&image, &plan, &net, &weights, 1)?;
        let (_, f) = analyze_full(&image, &net, &weights, 1)?;
        println!(
            "{side:>6} {:>12.2} {:>12.2} {:>12.2}",
            mib(t.image_peak_bytes),
            mib(t.latent_plane_bytes),
            mib(f.image_peak_bytes)
        );
    }
    Ok(())
}
