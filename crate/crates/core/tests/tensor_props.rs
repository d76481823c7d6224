use cps::tensor::{conv2d, crop2d, inner, stitch2d, tconv2d, Dims, Tensor};
use proptest::prelude::*;

fn rand_tensor(dims: Dims, seed: u64) -> Tensor {
    let mut rng = cps::blocks::SplitMix64::new(seed);
    Tensor::from_fn(dims, |_, _, _, _| (2.0 * rng.next_f64() - 1.0) as f32).unwrap()
}

/// Gather-form reference in f64.
fn naive_conv(x: &Tensor, w: &Tensor, s: usize) -> Vec<f64> {
    let (xd, wd) = (x.dims(), w.dims());
    let oh = (xd.h - wd.h) / s + 1;
    let ow = (xd.w - wd.w) / s + 1;
    let mut out = vec![0.0; wd.n * oh * ow];
    for co in 0..wd.n {
        for i in 0..oh {
            for j in 0..ow {
                let mut acc = 0.0;
                for ci in 0..wd.c {
                    for a in 0..wd.h {
                        for b in 0..wd.w {
                            acc += f64::from(x.get(0, ci, i * s + a, j * s + b))
                                * f64::from(w.get(co, ci, a, b));
                        }
                    }
                }
                out[(co * oh + i) * ow + j] = acc;
            }
        }
    }
    out
}

/// Scatter-form reference in f64.
fn naive_tconv(x: &Tensor, w: &Tensor, s: usize) -> Vec<f64> {
    let (xd, wd) = (x.dims(), w.dims());
    let k = wd.h;
    let oh = s * (xd.h - 1) + k;
    let ow = s * (xd.w - 1) + k;
    let mut out = vec![0.0; wd.c * oh * ow];
    for ci in 0..wd.n {
        for i in 0..xd.h {
            for j in 0..xd.w {
                let v = f64::from(x.get(0, ci, i, j));
                for co in 0..wd.c {
                    for a in 0..k {
                        for b in 0..k {
                            out[(co * oh + i * s + a) * ow + j * s + b] +=
                                v * f64::from(w.get(ci, co, a, b));
                        }
                    }
                }
            }
        }
    }
    out
}

fn close(a: &[f32], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        assert!(
            (f64::from(x) - y).abs() <= tol * (1.0 + y.abs()),
            "element {i}: {x} vs {y}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjointness(k in 1usize..=3, s in 1usize..=2, cin in 1usize..=3, cout in 1usize..=3,
                   h in 3usize..=9, w in 3usize..=9, seed in any::<u64>()) {
        let x = rand_tensor(Dims::new(1, cin, h, w), seed);
        let wt = rand_tensor(Dims::new(cout, cin, k, k), seed ^ 1);
        let cx = conv2d(&x, &wt, &vec![0.0; cout], s).unwrap();
        let y = rand_tensor(cx.dims(), seed ^ 2);
        let ty = tconv2d(&y, &wt, &vec![0.0; cin], s).unwrap();
        // rows of x past the last full window get no adjoint contribution
        let td = ty.dims();
        let xs = crop2d(&x, 0, 0, td.h, td.w).unwrap();
        let lhs = inner(&cx, &y).unwrap();
        let rhs = inner(&xs, &ty).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-4 * (1.0 + lhs.abs().max(rhs.abs())), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn conv_matches_reference(k in 1usize..=4, s in 1usize..=3, cin in 1usize..=3, cout in 1usize..=3,
                              h in 4usize..=10, w in 4usize..=10, seed in any::<u64>()) {
        let x = rand_tensor(Dims::new(1, cin, h, w), seed);
        let wt = rand_tensor(Dims::new(cout, cin, k, k), seed ^ 3);
        let y = conv2d(&x, &wt, &vec![0.0; cout], s).unwrap();
        close(y.data(), &naive_conv(&x, &wt, s), 1e-5);
    }

    #[test]
    fn tconv_matches_reference(k in 1usize..=4, s in 1usize..=3, cin in 1usize..=3, cout in 1usize..=3,
                               h in 1usize..=6, w in 1usize..=6, seed in any::<u64>()) {
        let x = rand_tensor(Dims::new(1, cin, h, w), seed);
        let wt = rand_tensor(Dims::new(cin, cout, k, k), seed ^ 4);
        let y = tconv2d(&x, &wt, &vec![0.0; cout], s).unwrap();
        close(y.data(), &naive_tconv(&x, &wt, s), 1e-5);
    }

    #[test]
    fn locality(k in 1usize..=4, s in 1usize..=3, h in 5usize..=12, w in 5usize..=12,
                py in 0usize..12, px in 0usize..12, seed in any::<u64>()) {
        let (py, px) = (py % h, px % w);
        let x = rand_tensor(Dims::new(1, 2, h, w), seed);
        let wt = rand_tensor(Dims::new(2, 2, k, k), seed ^ 5);
        let bias = [0.1, -0.2];
        let base = conv2d(&x, &wt, &bias, s).unwrap();
        let bumped = Tensor::from_fn(x.dims(), |n, c, y, xx| {
            let v = x.get(n, c, y, xx);
            if (y, xx) == (py, px) { v + 1.0 } else { v }
        }).unwrap();
        let out = conv2d(&bumped, &wt, &bias, s).unwrap();
        let d = out.dims();
        for c in 0..d.c {
            for i in 0..d.h {
                for j in 0..d.w {
                    let inside = (i * s..i * s + k).contains(&py) && (j * s..j * s + k).contains(&px);
                    if !inside {
                        prop_assert_eq!(out.get(0, c, i, j).to_bits(), base.get(0, c, i, j).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn stitch_of_split_is_identity(h in 1usize..=12, w in 1usize..=12, cut_y in 0usize..12, cut_x in 0usize..12) {
        let x = rand_tensor(Dims::new(1, 2, h, w), (h * 31 + w) as u64);
        let (cy, cx) = (cut_y % h, cut_x % w);
        let mut tiles = Vec::new();
        let mut offsets = Vec::new();
        for (y0, y1) in [(0, cy), (cy, h)] {
            for (x0, x1) in [(0, cx), (cx, w)] {
                if y1 > y0 && x1 > x0 {
                    tiles.push(crop2d(&x, y0, x0, y1 - y0, x1 - x0).unwrap());
                    offsets.push((y0, x0));
                }
            }
        }
        prop_assert!(stitch2d(&tiles, &offsets, h, w).unwrap().bit_eq(&x));
    }
}

#[test]
fn shape_laws_exhaustive() {
    for k in 1..=5 {
        for s in 1..=3 {
            let wc = Tensor::zeros(Dims::new(1, 1, k, k)).unwrap();
            for w_in in k..=64 {
                let x = Tensor::zeros(Dims::new(1, 1, w_in, 1.max(k))).unwrap();
                let y = conv2d(&x, &wc, &[0.0], s).unwrap();
                assert_eq!(y.dims().h, (w_in - k) / s + 1, "conv w={w_in} k={k} s={s}");
            }
            for w_in in 1..=64 {
                let x = Tensor::zeros(Dims::new(1, 1, w_in, 1)).unwrap();
                let y = tconv2d(&x, &wc, &[0.0], s).unwrap();
                assert_eq!(y.dims().h, s * (w_in - 1) + k, "tconv w={w_in} k={k} s={s}");
            }
        }
    }
}

#[test]
fn crop_composition() {
    let x = rand_tensor(Dims::new(1, 2, 16, 16), 9);
    let a = crop2d(&crop2d(&x, 2, 3, 12, 10).unwrap(), 4, 1, 5, 6).unwrap();
    let b = crop2d(&x, 6, 4, 5, 6).unwrap();
    assert!(a.bit_eq(&b));
    let rows = crop2d(&x, 2, 0, 12, 16).unwrap();
    assert_eq!(rows.get(0, 1, 0, 5), x.get(0, 1, 2, 5));
    assert_eq!(rows.get(0, 1, 11, 5), x.get(0, 1, 13, 5));
}

#[test]
fn deterministic_across_thread_counts() {
    let x = rand_tensor(Dims::new(1, 8, 40, 40), 11);
    let w = rand_tensor(Dims::new(16, 8, 3, 3), 12);
    let wt = rand_tensor(Dims::new(8, 16, 2, 2), 13);
    let bias = vec![0.05; 16];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let y = conv2d(&x, &w, &bias, 1).unwrap();
            let z = tconv2d(&x, &wt, &bias, 2).unwrap();
            (y, z)
        })
    };
    let (y1, z1) = run(1);
    for t in [2, 4, 7] {
        let (y, z) = run(t);
        assert!(y.bit_eq(&y1) && z.bit_eq(&z1), "{t} threads");
    }
}
