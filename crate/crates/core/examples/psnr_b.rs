//! PSNR-B with tile-seam and 8-pixel-grid boundaries, on an image with an
//! artificial seam and on a codec reconstruction.
//!
//!     cargo run --release --example psnr_b

use cps::blocks::{build_paper_network, init_weights};
use cps::codec::{decode_tiled, encode_plan, encode_tiled, EncodeOptions};
use cps::image::Image;
use cps::metrics::{psnr, psnr_b, Boundaries};

fn main() -> cps::Result<()> {
    let original = Image::synthetic(256, 256, 2)?;
    // brighten the right half: a visible seam at column 128
    let seamed = Image::from_fn(256, 256, |y, x, c| {
        let v = original.pixel(y, x, c);
        if x >= 128 {
            v.saturating_add(12)
        } else {
            v
        }
    })?;
    let seam = Boundaries {
        rows: vec![],
        cols: vec![128],
    };
    println!(
        "artificial seam: psnr {:.3} dB, psnr_b {:.3} dB",
        psnr(&original, &seamed)?,
        psnr_b(&original, &seamed, &seam)?
    );

    let net = build_paper_network(8);
    let weights = init_weights(&net, 0);
    let opts = EncodeOptions::default();
    let enc = encode_tiled(&original, &net, &weights, &opts)?;
    let dec = decode_tiled(&enc.bitstream, &net, &weights, 0)?;
    let tiles = Boundaries::from_plan(&encode_plan(&original, &net, &opts)?);
    println!(
        "codec output:    psnr {:.3} dB",
        psnr(&original, &dec.image)?
    );
    println!(
        "  tile seams:    psnr_b {:.3} dB",
        psnr_b(&original, &dec.image, &tiles)?
    );
    println!(
        "  8-pixel grid:  psnr_b {:.3} dB",
        psnr_b(&original, &dec.image, &Boundaries::grid(256, 256, 8))?
    );
    Ok(())
}
