//! Encode a PPM image (or a synthetic one) through overlapping tiles,
//! decode it through haloed tiles and report rate and distortion.
//!
//!     cargo run --release --example tiled_encode [image.ppm]

use cps::blocks::{build_paper_network, init_weights};
use cps::codec::{decode_tiled, encode_plan, encode_tiled, EncodeOptions};
use cps::image::Image;
use cps::metrics::{Boundaries, MetricReport};

fn main() -> cps::Result<()> {
    let image = match std::env::args().nth(1) {
        Some(path) => Image::load(path)?,
        None => Image::synthetic(384, 256, 0)?,
    };
    let net = build_paper_network(16);
    let weights = init_weights(&net, 0);
    let opts = EncodeOptions {
        pad: true,
        ..Default::default()
    };

    let enc = encode_tiled(&image, &net, &weights, &opts)?;
    let dec = decode_tiled(&enc.bitstream, &net, &weights, 0)?;
    let plan = encode_plan(&image, &net, &opts)?;
    let report = MetricReport::measure(
        &image,
        &dec.image,
        &Boundaries::from_plan(&plan),
        enc.bitstream.len(),
    )?;

    println!(
        "{}x{} image, {} tiles",
        image.width(),
        image.height(),
        enc.stats.tiles
    );
    println!(
        "payloads: z {} B, y {} B (model estimate {:.0} bits)",
        enc.rate.bytes_z,
        enc.rate.bytes_y,
        enc.rate.estimated_bits()
    );
    println!("{report}");
    Ok(())
}
