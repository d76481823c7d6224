#![allow(dead_code)]

use cps::blocks::{init_weights, NetworkSpec, SplitMix64, WeightStore};
use cps::codec::{self, Bitstream, EncodeOptions};
use cps::image::Image;
use cps::metrics::{psnr_b, Boundaries};

/// One randomized equivalence configuration.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
    pub image_seed: u64,
    pub weight_seed: u64,
}

pub const PATCHES: [usize; 3] = [80, 128, 256];

/// `count` cases cycling through the patch sizes, with image sides drawn
/// from multiples of 16 between the patch size and twice it (capped).
pub fn cases(count: usize, seed: u64, max_side: usize) -> Vec<Case> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|i| {
            let patch = PATCHES[i % PATCHES.len()];
            let mut side = || {
                let hi = (2 * patch).min(max_side).max(patch + 16);
                let steps = (hi - patch) / 16;
                patch + 16 * (1 + (rng.next_u64() as usize % steps))
            };
            let (width, height) = (side(), side());
            Case {
                width,
                height,
                patch,
                image_seed: rng.next_u64(),
                weight_seed: rng.next_u64(),
            }
        })
        .collect()
}

/// Outcome of running both paths on one case; `None` fields mean equal.
#[derive(Debug, Default)]
pub struct Comparison {
    pub latent: Option<String>,
    pub bitstream: Option<String>,
    pub reconstruction: Option<String>,
    pub psnr_b: Option<String>,
}

impl Comparison {
    pub fn identical(&self) -> bool {
        self.latent.is_none()
            && self.bitstream.is_none()
            && self.reconstruction.is_none()
            && self.psnr_b.is_none()
    }
}

pub fn compare(net: &NetworkSpec, case: &Case) -> Comparison {
    let weights = init_weights(net, case.weight_seed);
    compare_with(net, &weights, case)
}

pub fn compare_with(net: &NetworkSpec, weights: &WeightStore, case: &Case) -> Comparison {
    let image = Image::synthetic(case.width, case.height, case.image_seed).unwrap();
    let opts = EncodeOptions {
        patch: case.patch,
        ..Default::default()
    };
    let tiled = codec::encode_tiled(&image, net, weights, &opts).unwrap();
    let full = codec::encode_full(&image, net, weights, &opts).unwrap();
    let mut out = Comparison::default();
    if let Some(p) = tiled.latent.first_difference(&full.latent) {
        out.latent = Some(format!("latent differs at {p:?}"));
    }
    let (bt, bf) = (tiled.bitstream.to_bytes(), full.bitstream.to_bytes());
    if bt != bf {
        out.bitstream = Some(format!(
            "bitstreams differ ({} vs {} bytes)",
            bt.len(),
            bf.len()
        ));
    }
    let dt = codec::decode_tiled(&Bitstream::from_bytes(&bt).unwrap(), net, weights, 0).unwrap();
    let df = codec::decode_full(&Bitstream::from_bytes(&bf).unwrap(), net, weights, 0).unwrap();
    if dt.image != df.image {
        out.reconstruction = Some("reconstructions differ".into());
    }
    let plan = codec::encode_plan(&image, net, &opts).unwrap();
    let bounds = Boundaries::from_plan(&plan);
    let (a, b) = (
        psnr_b(&image, &dt.image, &bounds).unwrap(),
        psnr_b(&image, &df.image, &bounds).unwrap(),
    );
    if a.to_bits() != b.to_bits() {
        out.psnr_b = Some(format!("psnr_b {a} vs {b}"));
    }
    out
}

/// Whether analysis with the overlap reduced by `deficit` changes at
/// least one latent value relative to the whole-image path.
pub fn deficit_breaks(
    net: &NetworkSpec,
    weights: &WeightStore,
    case: &Case,
    deficit: usize,
) -> bool {
    let image = Image::synthetic(case.width, case.height, case.image_seed).unwrap();
    let plan =
        cps::pops::plan_encode_with_deficit(case.height, case.width, case.patch, net, deficit)
            .unwrap();
    let (short, _) = codec::analyze_tiled(&image, &plan, net, weights, 0).unwrap();
    let (full, _) = codec::analyze_full(&image, net, weights, 0).unwrap();
    short.first_difference(&full).is_some()
}
