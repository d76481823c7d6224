use std::collections::BTreeSet;

use cps::blocks::{build_paper_network, forward, init_weights};
use cps::calculus::{
    footprint, out_size, overlap, receptive_field, scale_factor, unreachable, valid_feature_count,
    LayerKind, LayerSpec,
};
use cps::tensor::{Dims, Tensor};
use proptest::prelude::*;

/// Input indices that can influence output `j`, by enumerating every
/// layer's connections from the last layer back to the first.
fn brute_dependencies(stack: &[LayerSpec], w_in: usize, j: usize) -> BTreeSet<usize> {
    let mut sizes = vec![w_in];
    for l in stack {
        let w = *sizes.last().unwrap();
        sizes.push(match l.kind {
            LayerKind::Tconv => l.s * (w - 1) + l.k,
            _ => (w - l.k) / l.s + 1,
        });
    }
    let mut set: BTreeSet<usize> = [j].into();
    for (idx, l) in stack.iter().enumerate().rev() {
        let w = sizes[idx];
        let mut prev = BTreeSet::new();
        for &o in &set {
            for i in 0..w {
                let linked = match l.kind {
                    LayerKind::Tconv => o >= i * l.s && o - i * l.s < l.k,
                    _ => i >= o * l.s && i - o * l.s < l.k,
                };
                if linked {
                    prev.insert(i);
                }
            }
        }
        set = prev;
    }
    set
}

fn conv_stack() -> impl Strategy<Value = Vec<LayerSpec>> {
    prop::collection::vec((1usize..=5, 1usize..=3), 1..=8)
        .prop_map(|v| v.into_iter().map(|(k, s)| LayerSpec::conv(k, s)).collect())
}

fn mixed_stack() -> impl Strategy<Value = Vec<LayerSpec>> {
    prop::collection::vec((any::<bool>(), 1usize..=4, 1usize..=2), 1..=5).prop_map(|v| {
        v.into_iter()
            .map(|(t, k, s)| {
                if t {
                    LayerSpec::tconv(k, s)
                } else {
                    LayerSpec::conv(k, s)
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn footprint_length_is_receptive_field(stack in conv_stack()) {
        let r = receptive_field(&stack).unwrap();
        let rho = scale_factor(&stack);
        // room for three outputs
        let w_in = r + 2 * rho;
        prop_assert_eq!(out_size(&stack, w_in).unwrap(), 3);
        let mut prev_lo = None;
        for j in 0..3 {
            let fp = footprint(&stack, w_in, j).unwrap();
            prop_assert_eq!(fp.len(), r);
            let brute = brute_dependencies(&stack, w_in, j);
            prop_assert_eq!(*brute.first().unwrap(), fp.lo);
            prop_assert_eq!(*brute.last().unwrap(), fp.hi);
            if let Some(p) = prev_lo {
                prop_assert_eq!(fp.lo - p, rho);
            }
            prev_lo = Some(fp.lo);
        }
    }

    #[test]
    fn footprint_bounds_mixed_stacks(stack in mixed_stack(), w_in in 6usize..=14) {
        let Ok(w_out) = out_size(&stack, w_in) else { return Ok(()) };
        for j in 0..w_out {
            let brute = brute_dependencies(&stack, w_in, j);
            let fp = footprint(&stack, w_in, j).unwrap();
            if let (Some(&lo), Some(&hi)) = (brute.first(), brute.last()) {
                prop_assert!(fp.lo <= lo && hi <= fp.hi, "output {}: oracle {}..={} vs {:?}", j, lo, hi, fp);
            }
        }
    }
}

#[test]
fn valid_count_matches_unreachable_exhaustive() {
    for rho in 1..=64usize {
        for r in 1..=512usize {
            let two_e = unreachable(r, rho);
            let mut w_p = rho * r.div_ceil(rho);
            while w_p <= 1024 {
                assert_eq!(
                    w_p / rho - valid_feature_count(w_p, r, rho).unwrap(),
                    two_e,
                    "w_p={w_p} r={r} rho={rho}"
                );
                w_p += rho;
            }
        }
    }
}

#[test]
fn overlap_branches_agree_exhaustive() {
    for r in 1..=512usize {
        for rho in 1..=64usize {
            let o = overlap(r, rho);
            let by_branch = if r % rho == 0 {
                r - rho
            } else {
                rho * (r / rho)
            };
            assert_eq!(o, by_branch);
            assert_eq!(o, rho * unreachable(r, rho), "r={r} rho={rho}");
        }
    }
}

#[test]
fn default_network_constants() {
    let net = build_paper_network(192);
    let s = net.summary(Some(128)).unwrap();
    assert_eq!(
        (s.r, s.rho, s.o, s.two_e, s.step),
        (72, 16, 64, 4, Some(64))
    );
    assert_eq!(valid_feature_count(256, 72, 16).unwrap(), 12);
    assert_eq!(valid_feature_count(128, 72, 16).unwrap(), 4);
    assert_eq!(unreachable(5, 1), 4);
    assert_eq!(overlap(5, 1), 4);
    assert_eq!(overlap(16, 16), 0);
}

/// The symbolic footprint must cover the real network's dependencies:
/// perturbing a pixel outside it leaves the latent untouched.
#[test]
fn footprint_covers_numeric_dependencies() {
    let net = build_paper_network(2);
    let w = init_weights(&net, 3);
    let n = 160;
    let x = Tensor::from_fn(Dims::new(1, 3, 80, n), |_, c, y, xx| {
        ((c * 7 + y * 3 + xx) % 11) as f32 / 11.0
    })
    .unwrap();
    let base = forward(&net.g_a, &w, &x).unwrap();
    let lw = base.dims().w;
    for col in [0usize, 27, 28, 43, 44, 80, 159] {
        let bumped = Tensor::from_fn(x.dims(), |nn, c, y, xx| {
            let v = x.get(nn, c, y, xx);
            if xx == col {
                v + 0.5
            } else {
                v
            }
        })
        .unwrap();
        let out = forward(&net.g_a, &w, &bumped).unwrap();
        for j in 0..lw {
            let fp = footprint(&net.g_a, n, j).unwrap();
            if !(fp.lo..=fp.hi).contains(&col) {
                for c in 0..2 {
                    assert_eq!(
                        out.get(0, c, 0, j).to_bits(),
                        base.get(0, c, 0, j).to_bits(),
                        "col {col} latent {j}"
                    );
                }
            }
        }
    }
}
