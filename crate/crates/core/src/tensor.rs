//! Rank-4 `f32` tensors and the padding-free operators the codec runs on.
//!
//! Every reduction has one fixed accumulation order per output element:
//! input channel, then kernel row, then kernel column, with the bias added
//! last. Work is split across output planes only, so results are
//! bit-identical for any thread count, and a value computed on a tile is
//! bit-identical to the same value computed on the whole image whenever
//! the tile contains its complete input window.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

static LIVE_BYTES: AtomicUsize = AtomicUsize::new(0);
static PEAK_BYTES: AtomicUsize = AtomicUsize::new(0);

/// Snapshot of the process-wide tensor payload counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocStats {
    pub live_bytes: usize,
    pub peak_bytes: usize,
}

/// Current tensor payload bytes and the high-water mark since the last
/// [`reset_peak`]. Only `f32` payloads are counted.
pub fn alloc_stats() -> AllocStats {
    let live_bytes = LIVE_BYTES.load(Ordering::SeqCst);
    let peak_bytes = PEAK_BYTES.load(Ordering::SeqCst).max(live_bytes);
    AllocStats {
        live_bytes,
        peak_bytes,
    }
}

/// Sets the high-water mark to the current live byte count.
pub fn reset_peak() -> AllocStats {
    let live = LIVE_BYTES.load(Ordering::SeqCst);
    PEAK_BYTES.store(live, Ordering::SeqCst);
    alloc_stats()
}

fn track_alloc(bytes: usize) {
    let live = LIVE_BYTES.fetch_add(bytes, Ordering::SeqCst) + bytes;
    PEAK_BYTES.fetch_max(live, Ordering::SeqCst);
}

fn track_free(bytes: usize) {
    LIVE_BYTES.fetch_sub(bytes, Ordering::SeqCst);
}

/// Tensor extents in (batch, channel, height, width) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Dims { n, c, h, w }
    }

    pub const fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.c, self.h, self.w)
    }
}

/// Dense row-major n→c→h→w tensor. Immutable once built.
pub struct Tensor {
    dims: Dims,
    data: Vec<f32>,
}

impl Tensor {
    pub fn from_vec(dims: Dims, data: Vec<f32>) -> Result<Self> {
        if dims.n == 0 || dims.c == 0 || dims.h == 0 || dims.w == 0 {
            return Err(Error::Contract(format!(
                "tensor dims must be >= 1, got {dims}"
            )));
        }
        if data.len() != dims.len() {
            return Err(Error::Contract(format!(
                "data length {} does not match dims {dims}",
                data.len()
            )));
        }
        track_alloc(data.len() * 4);
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::from_vec(dims, vec![0.0; dims.len()])
    }

    pub fn full(dims: Dims, value: f32) -> Result<Self> {
        Self::from_vec(dims, vec![value; dims.len()])
    }

    pub fn from_fn(
        dims: Dims,
        mut f: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(dims.len());
        for n in 0..dims.n {
            for c in 0..dims.c {
                for y in 0..dims.h {
                    for x in 0..dims.w {
                        data.push(f(n, c, y, x));
                    }
                }
            }
        }
        Self::from_vec(dims, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn byte_len(&self) -> usize {
        self.data.len() * 4
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.dims.c + c) * self.dims.h + y) * self.dims.w + x
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(n, c, y, x)]
    }

    /// One (h, w) plane.
    pub fn plane(&self, n: usize, c: usize) -> &[f32] {
        let p = self.dims.plane();
        let start = (n * self.dims.c + c) * p;
        &self.data[start..start + p]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Tensor::from_vec(self.dims, data).expect("same dims")
    }

    /// Bitwise equality of dims and payload.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.dims == other.dims
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// First (n, c, y, x) where the payloads differ bitwise.
    pub fn first_difference(&self, other: &Tensor) -> Option<(usize, usize, usize, usize)> {
        if self.dims != other.dims {
            return Some((0, 0, 0, 0));
        }
        let pos = self
            .data
            .iter()
            .zip(&other.data)
            .position(|(a, b)| a.to_bits() != b.to_bits())?;
        let d = self.dims;
        let x = pos % d.w;
        let y = (pos / d.w) % d.h;
        let c = (pos / d.plane()) % d.c;
        let n = pos / (d.plane() * d.c);
        Some((n, c, y, x))
    }
}

impl Clone for Tensor {
    fn clone(&self) -> Self {
        track_alloc(self.data.len() * 4);
        Tensor {
            dims: self.dims,
            data: self.data.clone(),
        }
    }
}

impl Drop for Tensor {
    fn drop(&mut self) {
        track_free(self.data.len() * 4);
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.data == other.data
    }
}

/// Planes per task below which splitting work is not worth it.
const PAR_MIN_ELEMS: usize = 1 << 14;

fn check_kernel(
    weight: &Tensor,
    bias: &[f32],
    stride: usize,
    c_out: usize,
    what: &str,
) -> Result<()> {
    let wd = weight.dims();
    if wd.h != wd.w {
        return Err(Error::Contract(format!(
            "{what}: kernel must be square, got {wd}"
        )));
    }
    if stride == 0 {
        return Err(Error::Contract(format!("{what}: stride must be >= 1")));
    }
    if bias.len() != c_out {
        return Err(Error::Contract(format!(
            "{what}: bias length {} != output channels {c_out}",
            bias.len()
        )));
    }
    Ok(())
}

/// Padding-free strided convolution (cross-correlation).
///
/// `weight` is `(c_out, c_in, k, k)`. The output is
/// `floor((h - k) / stride) + 1` by the same for the width.
pub fn conv2d(x: &Tensor, weight: &Tensor, bias: &[f32], stride: usize) -> Result<Tensor> {
    let Dims {
        n: c_out,
        c: c_in,
        h: k,
        ..
    } = weight.dims();
    check_kernel(weight, bias, stride, c_out, "conv2d")?;
    let xd = x.dims();
    if xd.c != c_in {
        return Err(Error::Contract(format!(
            "conv2d: input has {} channels, kernel expects {c_in}",
            xd.c
        )));
    }
    if xd.h < k || xd.w < k {
        return Err(Error::sizing(
            format!("conv2d(k={k}, s={stride})"),
            format!("input {}x{} is smaller than the kernel", xd.h, xd.w),
        ));
    }
    let oh = (xd.h - k) / stride + 1;
    let ow = (xd.w - k) / stride + 1;
    let od = Dims::new(xd.n, c_out, oh, ow);
    let mut out = vec![0.0f32; od.len()];
    let wdata = weight.data();

    let plane_job = |(idx, dst): (usize, &mut [f32])| {
        let n = idx / c_out;
        let co = idx % c_out;
        for oy in 0..oh {
            let acc = &mut dst[oy * ow..(oy + 1) * ow];
            for ci in 0..c_in {
                let src = x.plane(n, ci);
                for ky in 0..k {
                    let row = &src[(oy * stride + ky) * xd.w..(oy * stride + ky + 1) * xd.w];
                    for kx in 0..k {
                        let wv = wdata[((co * c_in + ci) * k + ky) * k + kx];
                        if stride == 1 {
                            for (a, &v) in acc.iter_mut().zip(&row[kx..kx + ow]) {
                                *a += v * wv;
                            }
                        } else {
                            for (a, &v) in acc.iter_mut().zip(row[kx..].iter().step_by(stride)) {
                                *a += v * wv;
                            }
                        }
                    }
                }
            }
            let b = bias[co];
            for a in acc.iter_mut() {
                *a += b;
            }
        }
    };
    let plane = oh * ow;
    if od.len() >= PAR_MIN_ELEMS && c_out > 1 {
        out.par_chunks_mut(plane).enumerate().for_each(plane_job);
    } else {
        out.chunks_mut(plane).enumerate().for_each(plane_job);
    }
    Tensor::from_vec(od, out)
}

/// Padding-free transposed convolution, the adjoint of [`conv2d`].
///
/// `weight` is `(c_in, c_out, k, k)`. The output is `stride * (h - 1) + k`.
/// Each output value gathers, in (input channel, kernel row, kernel column)
/// order, every input pixel whose stamp covers it.
pub fn tconv2d(x: &Tensor, weight: &Tensor, bias: &[f32], stride: usize) -> Result<Tensor> {
    let Dims {
        n: c_in,
        c: c_out,
        h: k,
        ..
    } = weight.dims();
    check_kernel(weight, bias, stride, c_out, "tconv2d")?;
    let xd = x.dims();
    if xd.c != c_in {
        return Err(Error::Contract(format!(
            "tconv2d: input has {} channels, kernel expects {c_in}",
            xd.c
        )));
    }
    let oh = stride * (xd.h - 1) + k;
    let ow = stride * (xd.w - 1) + k;
    let od = Dims::new(xd.n, c_out, oh, ow);
    let mut out = vec![0.0f32; od.len()];
    let wdata = weight.data();

    let plane_job = |(idx, dst): (usize, &mut [f32])| {
        let n = idx / c_out;
        let co = idx % c_out;
        for oy in 0..oh {
            let acc = &mut dst[oy * ow..(oy + 1) * ow];
            for ci in 0..c_in {
                let src = x.plane(n, ci);
                for ky in 0..k {
                    if oy < ky || (oy - ky) % stride != 0 {
                        continue;
                    }
                    let iy = (oy - ky) / stride;
                    if iy >= xd.h {
                        continue;
                    }
                    let row = &src[iy * xd.w..(iy + 1) * xd.w];
                    for kx in 0..k {
                        let wv = wdata[((ci * c_out + co) * k + ky) * k + kx];
                        // outputs kx, kx + s, ... receive row[0], row[1], ...
                        for (a, &v) in acc[kx..].iter_mut().step_by(stride).zip(row) {
                            *a += v * wv;
                        }
                    }
                }
            }
            let b = bias[co];
            for a in acc.iter_mut() {
                *a += b;
            }
        }
    };
    let plane = oh * ow;
    if od.len() >= PAR_MIN_ELEMS && c_out > 1 {
        out.par_chunks_mut(plane).enumerate().for_each(plane_job);
    } else {
        out.chunks_mut(plane).enumerate().for_each(plane_job);
    }
    Tensor::from_vec(od, out)
}

/// Negative slope of [`activation`].
pub const LEAKY_SLOPE: f32 = 0.01;

/// Leaky rectifier, elementwise.
pub fn activation(x: &Tensor) -> Tensor {
    x.map(|v| if v >= 0.0 { v } else { v * LEAKY_SLOPE })
}

/// Elementwise `a + b`.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.dims() != b.dims() {
        return Err(Error::Contract(format!(
            "add: shapes {} and {} differ",
            a.dims(),
            b.dims()
        )));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
    Tensor::from_vec(a.dims(), data)
}

/// Copies the spatial window `[top, top + height) x [left, left + width)`.
pub fn crop2d(x: &Tensor, top: usize, left: usize, height: usize, width: usize) -> Result<Tensor> {
    let d = x.dims();
    if height == 0 || width == 0 || top + height > d.h || left + width > d.w {
        return Err(Error::OutOfBounds {
            top,
            left,
            height,
            width,
            h: d.h,
            w: d.w,
        });
    }
    let od = Dims::new(d.n, d.c, height, width);
    let mut data = Vec::with_capacity(od.len());
    for n in 0..d.n {
        for c in 0..d.c {
            let p = x.plane(n, c);
            for y in top..top + height {
                data.extend_from_slice(&p[y * d.w + left..y * d.w + left + width]);
            }
        }
    }
    Tensor::from_vec(od, data)
}

/// Concatenates along the channel axis.
pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Contract("concat_channels: nothing to concatenate".into()))?
        .dims();
    let mut c = 0;
    for p in parts {
        let d = p.dims();
        if d.n != first.n || d.h != first.h || d.w != first.w {
            return Err(Error::Contract(format!(
                "concat_channels: {d} does not match {first}"
            )));
        }
        c += d.c;
    }
    let od = Dims::new(first.n, c, first.h, first.w);
    let mut data = Vec::with_capacity(od.len());
    for n in 0..first.n {
        for p in parts {
            for ci in 0..p.dims().c {
                data.extend_from_slice(p.plane(n, ci));
            }
        }
    }
    Tensor::from_vec(od, data)
}

/// Channels `[start, start + count)`.
pub fn slice_channels(x: &Tensor, start: usize, count: usize) -> Result<Tensor> {
    let d = x.dims();
    if count == 0 || start + count > d.c {
        return Err(Error::Contract(format!(
            "slice_channels: [{start}, {}) outside {} channels",
            start + count,
            d.c
        )));
    }
    let od = Dims::new(d.n, count, d.h, d.w);
    let mut data = Vec::with_capacity(od.len());
    for n in 0..d.n {
        for c in start..start + count {
            data.extend_from_slice(x.plane(n, c));
        }
    }
    Tensor::from_vec(od, data)
}

/// Extends the spatial extent to `(height, width)` by repeating the last
/// row and column.
pub fn replicate_pad(x: &Tensor, height: usize, width: usize) -> Result<Tensor> {
    let d = x.dims();
    if height < d.h || width < d.w {
        return Err(Error::Contract(format!(
            "replicate_pad: target {height}x{width} smaller than {}x{}",
            d.h, d.w
        )));
    }
    let od = Dims::new(d.n, d.c, height, width);
    Tensor::from_fn(od, |n, c, y, xx| {
        x.get(n, c, y.min(d.h - 1), xx.min(d.w - 1))
    })
}

/// Assembles tiles placed at `(top, left)` offsets into a `height x width`
/// plane. Every output pixel must be covered by exactly one tile.
pub fn stitch2d(
    tiles: &[Tensor],
    offsets: &[(usize, usize)],
    height: usize,
    width: usize,
) -> Result<Tensor> {
    if tiles.len() != offsets.len() {
        return Err(Error::Contract(format!(
            "stitch2d: {} tiles but {} offsets",
            tiles.len(),
            offsets.len()
        )));
    }
    let first = tiles
        .first()
        .ok_or_else(|| Error::Contract("stitch2d: no tiles".into()))?
        .dims();
    let mut cover = vec![0u8; height * width];
    for (t, &(top, left)) in tiles.iter().zip(offsets) {
        let d = t.dims();
        if d.n != first.n || d.c != first.c {
            return Err(Error::Contract(format!(
                "stitch2d: tile {d} does not match {first}"
            )));
        }
        if top + d.h > height || left + d.w > width {
            return Err(Error::OutOfBounds {
                top,
                left,
                height: d.h,
                width: d.w,
                h: height,
                w: width,
            });
        }
        for y in top..top + d.h {
            for x in left..left + d.w {
                let slot = &mut cover[y * width + x];
                if *slot != 0 {
                    return Err(Error::Coverage {
                        row: y,
                        col: x,
                        detail: "covered by more than one tile".into(),
                    });
                }
                *slot = 1;
            }
        }
    }
    if let Some(pos) = cover.iter().position(|&v| v == 0) {
        return Err(Error::Coverage {
            row: pos / width,
            col: pos % width,
            detail: "not covered by any tile".into(),
        });
    }
    let od = Dims::new(first.n, first.c, height, width);
    let mut data = vec![0.0f32; od.len()];
    for (t, &(top, left)) in tiles.iter().zip(offsets) {
        let d = t.dims();
        for n in 0..d.n {
            for c in 0..d.c {
                let src = t.plane(n, c);
                let base = (n * od.c + c) * height * width;
                for y in 0..d.h {
                    let dst = base + (top + y) * width + left;
                    data[dst..dst + d.w].copy_from_slice(&src[y * d.w..(y + 1) * d.w]);
                }
            }
        }
    }
    Tensor::from_vec(od, data)
}

/// Sum of elementwise products, accumulated in `f64`.
pub fn inner(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Contract(format!(
            "inner: shapes {} and {} differ",
            a.dims(),
            b.dims()
        )));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(d: Dims) -> Tensor {
        Tensor::from_fn(d, |n, c, y, x| (n * 1000 + c * 100 + y * 10 + x) as f32).unwrap()
    }

    #[test]
    fn conv_output_sizes() {
        let x = Tensor::zeros(Dims::new(1, 1, 256, 256)).unwrap();
        let w = Tensor::zeros(Dims::new(1, 1, 2, 2)).unwrap();
        assert_eq!(conv2d(&x, &w, &[0.0], 2).unwrap().dims().h, 128);

        let x = Tensor::zeros(Dims::new(1, 1, 5, 5)).unwrap();
        let w = Tensor::zeros(Dims::new(1, 1, 3, 3)).unwrap();
        assert_eq!(conv2d(&x, &w, &[0.0], 1).unwrap().dims().h, 3);
    }

    #[test]
    fn conv_full_window_sum() {
        for k in 1..=4 {
            let x = Tensor::full(Dims::new(1, 1, k, k), 1.0).unwrap();
            let w = Tensor::full(Dims::new(1, 1, k, k), 1.0).unwrap();
            let y = conv2d(&x, &w, &[0.0], 1).unwrap();
            assert_eq!(y.dims(), Dims::new(1, 1, 1, 1));
            assert_eq!(y.data()[0], (k * k) as f32);
        }
    }

    #[test]
    fn conv_errors() {
        let x = Tensor::zeros(Dims::new(1, 2, 4, 4)).unwrap();
        let w = Tensor::zeros(Dims::new(1, 3, 2, 2)).unwrap();
        assert!(matches!(conv2d(&x, &w, &[0.0], 1), Err(Error::Contract(_))));
        let w = Tensor::zeros(Dims::new(1, 2, 5, 5)).unwrap();
        assert!(matches!(
            conv2d(&x, &w, &[0.0], 1),
            Err(Error::Sizing { .. })
        ));
    }

    #[test]
    fn tconv_output_sizes() {
        let x = Tensor::zeros(Dims::new(1, 1, 8, 8)).unwrap();
        let w = Tensor::zeros(Dims::new(1, 1, 2, 2)).unwrap();
        assert_eq!(tconv2d(&x, &w, &[0.0], 2).unwrap().dims().h, 16);
        for k in 1..=4 {
            for s in 1..=3 {
                let x = Tensor::full(Dims::new(1, 1, 1, 1), 1.0).unwrap();
                let w = Tensor::zeros(Dims::new(1, 1, k, k)).unwrap();
                assert_eq!(tconv2d(&x, &w, &[0.0], s).unwrap().dims().h, k);
            }
        }
    }

    #[test]
    fn tconv_single_stamp_copies_kernel() {
        let x = Tensor::full(Dims::new(1, 1, 1, 1), 2.0).unwrap();
        let w = Tensor::from_vec(Dims::new(1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = tconv2d(&x, &w, &[0.5], 3).unwrap();
        assert_eq!(y.data(), &[2.5, 4.5, 6.5, 8.5]);
    }

    #[test]
    fn conv_of_tconv_restores_shape() {
        let x = ramp(Dims::new(1, 2, 7, 9));
        let w = Tensor::full(Dims::new(2, 2, 2, 2), 0.25).unwrap();
        let up = tconv2d(&x, &w, &[0.0, 0.0], 2).unwrap();
        let down = conv2d(&up, &w, &[0.0, 0.0], 2).unwrap();
        assert_eq!(down.dims(), x.dims());
    }

    #[test]
    fn activation_values() {
        let x = Tensor::from_vec(Dims::new(1, 1, 1, 3), vec![1.0, -1.0, 0.0]).unwrap();
        assert_eq!(activation(&x).data(), &[1.0, -0.01, 0.0]);
    }

    #[test]
    fn crop_cases() {
        let x = ramp(Dims::new(1, 2, 16, 5));
        assert!(crop2d(&x, 0, 0, 16, 5).unwrap().bit_eq(&x));

        let c = crop2d(&x, 2, 0, 12, 5).unwrap();
        assert_eq!(c.dims().h, 12);
        for y in 0..12 {
            for xx in 0..5 {
                assert_eq!(c.get(0, 1, y, xx), x.get(0, 1, y + 2, xx));
            }
        }

        let twice = crop2d(&crop2d(&x, 1, 1, 10, 3).unwrap(), 2, 1, 5, 2).unwrap();
        assert!(twice.bit_eq(&crop2d(&x, 3, 2, 5, 2).unwrap()));

        assert!(matches!(
            crop2d(&x, 10, 0, 7, 5),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn stitch_cases() {
        let x = ramp(Dims::new(1, 1, 8, 3));
        assert!(stitch2d(std::slice::from_ref(&x), &[(0, 0)], 8, 3)
            .unwrap()
            .bit_eq(&x));

        let top = crop2d(&x, 0, 0, 4, 3).unwrap();
        let bottom = crop2d(&x, 4, 0, 4, 3).unwrap();
        let s = stitch2d(&[top.clone(), bottom.clone()], &[(0, 0), (4, 0)], 8, 3).unwrap();
        assert_eq!(s.dims().h, 8);
        assert!(s.bit_eq(&x));

        match stitch2d(std::slice::from_ref(&top), &[(0, 0)], 8, 3) {
            Err(Error::Coverage { row: 4, col: 0, .. }) => {}
            other => panic!("expected gap at (4, 0), got {other:?}"),
        }
        match stitch2d(&[top, bottom], &[(0, 0), (3, 0)], 8, 3) {
            Err(Error::Coverage { row: 3, col: 0, .. }) => {}
            other => panic!("expected double cover at (3, 0), got {other:?}"),
        }
    }

    #[test]
    fn channel_concat_and_slice() {
        let a = ramp(Dims::new(1, 2, 3, 3));
        let b = ramp(Dims::new(1, 1, 3, 3)).map(|v| -v);
        let c = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.dims().c, 3);
        assert!(slice_channels(&c, 0, 2).unwrap().bit_eq(&a));
        assert!(slice_channels(&c, 2, 1).unwrap().bit_eq(&b));
    }

    #[test]
    fn replicate_pad_repeats_edges() {
        let x = ramp(Dims::new(1, 1, 2, 2));
        let p = replicate_pad(&x, 3, 4).unwrap();
        assert_eq!(p.get(0, 0, 2, 3), x.get(0, 0, 1, 1));
        assert_eq!(p.get(0, 0, 0, 2), x.get(0, 0, 0, 1));
    }
}
