//! Distortion metrics on 8-bit images: MSE, PSNR and PSNR-B.
//!
//! PSNR-B penalizes the mean squared error with a blocking-effect factor
//! measured on the distorted image:
//!
//! ```text
//! BEF = eta * max(0, D_B - D_Bc)
//! ```
//!
//! `D_B` is the mean squared difference over horizontally and vertically
//! adjacent pixel pairs that straddle a boundary, `D_Bc` the same over
//! every other adjacent pair, and `eta = N_B / (N_B + N_Bc)` the share of
//! pairs that straddle one.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::pops::TilePlan;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 100.0;
const PEAK: f64 = 255.0;

/// Boundary positions. Row `r` is the edge between image rows `r - 1` and
/// `r`; likewise for columns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Boundaries {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Boundaries {
    pub fn none() -> Self {
        Boundaries::default()
    }

    /// Every `block` pixels, the classic fixed grid.
    pub fn grid(width: usize, height: usize, block: usize) -> Self {
        let step = |n: usize| (block..n).step_by(block.max(1)).collect();
        Boundaries {
            rows: step(height),
            cols: step(width),
        }
    }

    /// Where the kept regions of neighbouring tiles meet.
    pub fn from_plan(plan: &TilePlan) -> Self {
        let (rows, cols) = plan.seams();
        Boundaries { rows, cols }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.cols.is_empty()
    }
}

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Contract(format!(
            "images differ in size: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

fn psnr_from(err: f64) -> f64 {
    if err <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (PEAK * PEAK / err).log10()).min(PSNR_CAP)
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from(mse(a, b)?))
}

/// Blocking-effect factor of `img` for the given boundaries.
pub fn bef(img: &Image, bounds: &Boundaries) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut on_row = vec![false; h];
    let mut on_col = vec![false; w];
    for &r in bounds.rows.iter().filter(|&&r| r > 0 && r < h) {
        on_row[r] = true;
    }
    for &c in bounds.cols.iter().filter(|&&c| c > 0 && c < w) {
        on_col[c] = true;
    }
    let (mut sb, mut nb, mut sc, mut nc) = (0.0f64, 0usize, 0.0f64, 0usize);
    let mut pair = |boundary: bool, p: u8, q: u8| {
        let d = f64::from(p) - f64::from(q);
        if boundary {
            sb += d * d;
            nb += 1;
        } else {
            sc += d * d;
            nc += 1;
        }
    };
    for (y, &row_edge) in on_row.iter().enumerate() {
        for (x, &col_edge) in on_col.iter().enumerate() {
            for c in 0..3 {
                let v = img.pixel(y, x, c);
                if x > 0 {
                    pair(col_edge, img.pixel(y, x - 1, c), v);
                }
                if y > 0 {
                    pair(row_edge, img.pixel(y - 1, x, c), v);
                }
            }
        }
    }
    if nb == 0 || nc == 0 {
        return 0.0;
    }
    let eta = nb as f64 / (nb + nc) as f64;
    eta * (sb / nb as f64 - sc / nc as f64).max(0.0)
}

/// PSNR of `b` against reference `a`, penalized by the blocking effect of
/// `b` across `bounds`.
pub fn psnr_b(a: &Image, b: &Image, bounds: &Boundaries) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(psnr_from(m + bef(b, bounds)))
}

/// Bits per pixel of `bytes` over a `width x height` image.
pub fn bpp(bytes: usize, width: usize, height: usize) -> f64 {
    8.0 * bytes as f64 / (width * height) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub psnr: f64,
    pub psnr_b: f64,
    pub bef: f64,
    pub bpp: f64,
}

impl MetricReport {
    pub fn measure(
        reference: &Image,
        distorted: &Image,
        bounds: &Boundaries,
        bytes: usize,
    ) -> Result<Self> {
        let mse = mse(reference, distorted)?;
        let bef = bef(distorted, bounds);
        Ok(MetricReport {
            mse,
            psnr: psnr_from(mse),
            psnr_b: psnr_from(mse + bef),
            bef,
            bpp: bpp(bytes, reference.width(), reference.height()),
        })
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bpp: {:.6}", self.bpp)?;
        writeln!(f, "mse: {:.6}", self.mse)?;
        writeln!(f, "psnr: {:.4}", self.psnr)?;
        writeln!(f, "psnr_b: {:.4}", self.psnr_b)?;
        write!(f, "bef: {:.6}", self.bef)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(w: usize, h: usize, v: u8) -> Image {
        Image::from_fn(w, h, |_, _, _| v).unwrap()
    }

    #[test]
    fn psnr_cases() {
        let a = flat(8, 8, 100);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        let p = psnr(&a, &flat(8, 8, 101)).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.1308).abs() < 1e-4);
        assert_eq!(psnr(&flat(4, 4, 0), &flat(4, 4, 255)).unwrap(), 0.0);
        assert!(psnr(&a, &flat(8, 7, 100)).is_err());
    }

    #[test]
    fn empty_boundaries_give_psnr() {
        let a = Image::synthetic(32, 24, 0).unwrap();
        let b = Image::synthetic(32, 24, 1).unwrap();
        assert_eq!(
            psnr_b(&a, &b, &Boundaries::none()).unwrap(),
            psnr(&a, &b).unwrap()
        );
    }

    #[test]
    fn step_on_boundary_is_penalized() {
        let reference = Image::from_fn(32, 16, |_, x, _| (100 + x) as u8).unwrap();
        let stepped = Image::from_fn(32, 16, |_, x, _| {
            (100 + x + if x >= 16 { 20 } else { 0 }) as u8
        })
        .unwrap();
        let bounds = Boundaries {
            rows: vec![],
            cols: vec![16],
        };
        let p = psnr(&reference, &stepped).unwrap();
        let pb = psnr_b(&reference, &stepped, &bounds).unwrap();
        assert!(pb < p, "{pb} vs {p}");
        assert!(bef(&stepped, &bounds) > 0.0);
        assert!(bef(&stepped, &bounds) > 100.0 * bef(&reference, &bounds));
    }

    #[test]
    fn grid_positions() {
        let g = Boundaries::grid(20, 9, 8);
        assert_eq!(g.cols, [8, 16]);
        assert_eq!(g.rows, [8]);
    }

    #[test]
    fn report_fields() {
        let a = flat(4, 4, 10);
        let r = MetricReport::measure(&a, &flat(4, 4, 11), &Boundaries::none(), 6).unwrap();
        assert_eq!(r.bpp, 3.0);
        assert_eq!(r.mse, 1.0);
        let text = r.to_string();
        assert!(text.contains("bpp: 3.000000") && text.contains("psnr: 48.1308"));
    }
}
