//! Encode and decode pipelines plus the `CPS1` container.
//!
//! Both the tiled and the whole-image path share everything after the
//! analysis transform: the hyper transforms and entropy coding run on the
//! assembled latent plane. The tiled path never materializes the image as
//! a float tensor; tiles are read straight from the 8-bit raster.

use std::time::Instant;

use rayon::prelude::*;

use crate::blocks::{self, NetworkSpec, WeightStore, IMAGE_CHANNELS};
use crate::entropy::{self, RateReport, SymbolPlane};
use crate::error::{Error, Result, StageExt};
use crate::image::Image;
use crate::pops::{self, Rect, TilePlan};
use crate::tensor::{self, alloc_stats, reset_peak, Dims, Tensor};

pub const MAGIC: &[u8; 4] = b"CPS1";
pub const VERSION: u16 = 1;
/// Bytes before the payloads, checksum included.
pub const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 1 + 2 + 2 + 2 + 2 + 8 + 4 + 4 + 4;
/// The hyper transforms downsample by this factor; the latent plane is
/// edge-replicated up to a multiple of it.
pub const HYPER_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub patch: u16,
    pub overlap: u16,
    pub pad_right: u16,
    pub pad_bottom: u16,
    pub weights_hash: u64,
}

impl Header {
    pub fn padded_width(&self) -> usize {
        self.width as usize + self.pad_right as usize
    }

    pub fn padded_height(&self) -> usize {
        self.height as usize + self.pad_bottom as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub header: Header,
    pub payload_z: Vec<u8>,
    pub payload_y: Vec<u8>,
}

fn narrow<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v)
        .map_err(|_| Error::Format(format!("{what} {v} does not fit the container field")))
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload_z.len() + self.payload_y.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.push(h.channels);
        out.extend_from_slice(&h.patch.to_le_bytes());
        out.extend_from_slice(&h.overlap.to_le_bytes());
        out.extend_from_slice(&h.pad_right.to_le_bytes());
        out.extend_from_slice(&h.pad_bottom.to_le_bytes());
        out.extend_from_slice(&h.weights_hash.to_le_bytes());
        out.extend_from_slice(&(self.payload_z.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.payload_y.len() as u32).to_le_bytes());
        let crc = checksum(&out, &self.payload_z, &self.payload_y);
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&self.payload_z);
        out.extend_from_slice(&self.payload_y);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = blocks::Reader::new(bytes);
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}, expected CPS1")));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version}"
            )));
        }
        let header = Header {
            width: r.u32()?,
            height: r.u32()?,
            channels: r.u8()?,
            patch: r.u16()?,
            overlap: r.u16()?,
            pad_right: r.u16()?,
            pad_bottom: r.u16()?,
            weights_hash: r.u64()?,
        };
        if header.channels as usize != IMAGE_CHANNELS {
            return Err(Error::Format(format!(
                "{} image channels, expected 3",
                header.channels
            )));
        }
        if header.width == 0 || header.height == 0 {
            return Err(Error::Format("empty image in header".into()));
        }
        let len_z = r.u32()? as usize;
        let len_y = r.u32()? as usize;
        let stored = r.u32()?;
        let payload_z = r.take(len_z)?.to_vec();
        let payload_y = r.take(len_y)?.to_vec();
        if r.remaining() != 0 {
            return Err(Error::Format(format!(
                "{} bytes after the payloads",
                r.remaining()
            )));
        }
        let computed = checksum(&bytes[..HEADER_LEN - 4], &payload_z, &payload_y);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        Ok(Bitstream {
            header,
            payload_z,
            payload_y,
        })
    }

    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload_z.len() + self.payload_y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn checksum(header: &[u8], z: &[u8], y: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(header);
    h.update(z);
    h.update(y);
    h.finalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub patch: usize,
    /// Edge-replicate the image up to a multiple of rho instead of failing.
    pub pad: bool,
    /// Worker threads for tile and plane parallelism; 0 uses rayon's default.
    pub threads: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            patch: 128,
            pad: false,
            threads: 0,
        }
    }
}

/// Memory and timing of the analysis stage. Byte counts are tensor
/// payload bytes; they are only meaningful with one thread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeStats {
    /// Largest increase in live bytes while a single tile (or, for the
    /// whole-image path, the whole image) was analysed.
    pub image_peak_bytes: usize,
    /// Peak live bytes over the analysis stage above the pre-encode level,
    /// including the assembled latent plane.
    pub analysis_peak_bytes: usize,
    pub latent_plane_bytes: usize,
    pub tiles: usize,
    pub wall_ms: u128,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub bitstream: Bitstream,
    /// Continuous latent before quantization.
    pub latent: Tensor,
    pub y: SymbolPlane,
    pub z: SymbolPlane,
    pub rate: RateReport,
    pub stats: EncodeStats,
}

impl Encoded {
    pub fn bpp(&self) -> f64 {
        let h = &self.bitstream.header;
        crate::metrics::bpp(self.bitstream.len(), h.width as usize, h.height as usize)
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Pads (or checks) the image so both sides are multiples of rho.
fn prepare(image: &Image, rho: usize, pad: bool) -> Result<(Image, usize, usize)> {
    let (w, h) = (image.width(), image.height());
    let pw = w.div_ceil(rho) * rho;
    let ph = h.div_ceil(rho) * rho;
    if (pw, ph) == (w, h) {
        return Ok((image.clone(), 0, 0));
    }
    if !pad {
        return Err(Error::plan(format!(
            "image {w}x{h} is not a multiple of rho={rho}; pass pad to edge-replicate to {pw}x{ph}"
        )));
    }
    Ok((image.pad_replicate(pw, ph)?, pw - w, ph - h))
}

/// `(1, 3, h, w)` tensor of one image region, same values as
/// [`Image::to_tensor`].
pub fn region_tensor(image: &Image, r: Rect) -> Result<Tensor> {
    if r.bottom() > image.height() || r.right() > image.width() {
        return Err(Error::OutOfBounds {
            top: r.top,
            left: r.left,
            height: r.height,
            width: r.width,
            h: image.height(),
            w: image.width(),
        });
    }
    Tensor::from_fn(
        Dims::new(1, IMAGE_CHANNELS, r.height, r.width),
        |_, c, y, x| f32::from(image.pixel(r.top + y, r.left + x, c)) / 255.0,
    )
}

/// Latent plane of `image` through per-tile analysis transforms.
pub fn analyze_tiled(
    image: &Image,
    plan: &TilePlan,
    net: &NetworkSpec,
    weights: &WeightStore,
    threads: usize,
) -> Result<(Tensor, EncodeStats)> {
    let start = Instant::now();
    let base = reset_peak().live_bytes;
    let run = |t: &pops::Tile| -> Result<Tensor> {
        let x = region_tensor(image, t.src)?;
        let y = blocks::forward(&net.g_a, weights, &x)
            .map_err(|e| Error::plan(format!("tile ({}, {}): {e}", t.row, t.col)))?;
        drop(x);
        tensor::crop2d(&y, t.keep.top, t.keep.left, t.keep.height, t.keep.width)
    };
    let mut image_peak = 0;
    let mut overall_peak = base;
    let kept: Vec<Tensor> = if threads == 1 {
        with_threads(1, || {
            let mut out = Vec::with_capacity(plan.tiles.len());
            for t in &plan.tiles {
                let before = reset_peak().live_bytes;
                let y = run(t)?;
                let peak = alloc_stats().peak_bytes;
                image_peak = image_peak.max(peak - before);
                overall_peak = overall_peak.max(peak);
                out.push(y);
            }
            Ok(out)
        })?
    } else {
        with_threads(threads, || {
            plan.tiles.par_iter().map(run).collect::<Result<Vec<_>>>()
        })?
    };
    let analysis_peak = overall_peak.max(alloc_stats().peak_bytes) - base;
    let offsets: Vec<(usize, usize)> = plan.tiles.iter().map(|t| (t.dst.top, t.dst.left)).collect();
    let y = tensor::stitch2d(&kept, &offsets, plan.latent_h, plan.latent_w)?;
    let stats = EncodeStats {
        image_peak_bytes: image_peak,
        analysis_peak_bytes: analysis_peak,
        latent_plane_bytes: y.byte_len(),
        tiles: plan.tiles.len(),
        wall_ms: start.elapsed().as_millis(),
    };
    Ok((y, stats))
}

/// Latent plane of `image` through one whole-image analysis transform.
pub fn analyze_full(
    image: &Image,
    net: &NetworkSpec,
    weights: &WeightStore,
    threads: usize,
) -> Result<(Tensor, EncodeStats)> {
    let start = Instant::now();
    let base = reset_peak().live_bytes;
    let y = with_threads(threads, || {
        let x = image.to_tensor();
        blocks::forward(&net.g_a, weights, &x)
    })?;
    let peak = alloc_stats().peak_bytes - base;
    let stats = EncodeStats {
        image_peak_bytes: peak,
        analysis_peak_bytes: peak,
        latent_plane_bytes: y.byte_len(),
        tiles: 1,
        wall_ms: start.elapsed().as_millis(),
    };
    Ok((y, stats))
}

/// Mean and scale planes of the latent, cropped to its extent.
fn hyper_params(
    net: &NetworkSpec,
    weights: &WeightStore,
    z_hat: &Tensor,
    lh: usize,
    lw: usize,
) -> Result<(Tensor, Tensor)> {
    let c = net.channels;
    let params = blocks::forward(&net.h_s, weights, z_hat)?;
    let params = tensor::crop2d(&params, 0, 0, lh, lw)?;
    let mu = tensor::slice_channels(&params, 0, c)?;
    let sigma = tensor::slice_channels(&params, c, c)?.map(f32::abs);
    Ok((mu, sigma))
}

fn z_dims(c: usize, lh: usize, lw: usize) -> Dims {
    Dims::new(1, c, lh.div_ceil(HYPER_FACTOR), lw.div_ceil(HYPER_FACTOR))
}

fn symbols_tensor(plane: &SymbolPlane) -> Result<Tensor> {
    let data = plane.values.iter().map(|&v| f32::from(v)).collect();
    Tensor::from_vec(Dims::new(1, plane.c, plane.h, plane.w), data)
}

/// Symbols of y and z, their payloads (z first) and the rate report.
type CodedLatent = (SymbolPlane, SymbolPlane, Vec<u8>, Vec<u8>, RateReport);

/// Hyper analysis, quantization and entropy coding of an assembled latent.
fn code_latent(latent: &Tensor, net: &NetworkSpec, weights: &WeightStore) -> Result<CodedLatent> {
    let d = latent.dims();
    let zd = z_dims(d.c, d.h, d.w);
    let padded = tensor::replicate_pad(latent, zd.h * HYPER_FACTOR, zd.w * HYPER_FACTOR)
        .stage("hyper analysis")?;
    let z = blocks::forward(&net.h_a, weights, &padded).stage("hyper analysis")?;
    drop(padded);
    let zeros = Tensor::zeros(z.dims())?;
    let z_sym = entropy::quantize(&z, &zeros)?;
    let z_hat = symbols_tensor(&z_sym)?;
    let (mu, sigma) = hyper_params(net, weights, &z_hat, d.h, d.w).stage("hyper synthesis")?;
    let y_sym = entropy::quantize(latent, &mu)?;

    let z_bins = entropy::bins_from_channel_scales(weights.z_scales()?, z_sym.h, z_sym.w);
    let y_bins = entropy::bins_from_scales(&sigma);
    let table = entropy::gaussian_tables();
    let payload_z = entropy::range_encode(&z_sym.values, &z_bins).stage("entropy coding")?;
    let payload_y = entropy::range_encode(&y_sym.values, &y_bins).stage("entropy coding")?;
    let rate = RateReport {
        bits_y: entropy::information_bits(table, &y_sym.values, &y_bins),
        bits_z: entropy::information_bits(table, &z_sym.values, &z_bins),
        bytes_y: payload_y.len(),
        bytes_z: payload_z.len(),
    };
    Ok((y_sym, z_sym, payload_z, payload_y, rate))
}

fn finish_encode(
    image: &Image,
    opts: &EncodeOptions,
    net: &NetworkSpec,
    weights: &WeightStore,
    pads: (usize, usize),
    latent: Tensor,
    stats: EncodeStats,
) -> Result<Encoded> {
    let summary = net.summary(None)?;
    let (y, z, payload_z, payload_y, rate) =
        with_threads(opts.threads, || code_latent(&latent, net, weights))?;
    let header = Header {
        width: narrow(image.width(), "width")?,
        height: narrow(image.height(), "height")?,
        channels: IMAGE_CHANNELS as u8,
        patch: narrow(opts.patch, "patch size")?,
        overlap: narrow(summary.o, "overlap")?,
        pad_right: narrow(pads.0, "right padding")?,
        pad_bottom: narrow(pads.1, "bottom padding")?,
        weights_hash: weights.hash(),
    };
    Ok(Encoded {
        bitstream: Bitstream {
            header,
            payload_z,
            payload_y,
        },
        latent,
        y,
        z,
        rate,
        stats,
    })
}

fn check_weights(net: &NetworkSpec, weights: &WeightStore) -> Result<()> {
    weights.validate(net).stage("weights")
}

/// Tile plan the tiled encoder uses for `image` under `opts`.
pub fn encode_plan(image: &Image, net: &NetworkSpec, opts: &EncodeOptions) -> Result<TilePlan> {
    let rho = net.rho_enc();
    let (w, h) = (image.width(), image.height());
    let (pw, ph) = if opts.pad {
        (w.div_ceil(rho) * rho, h.div_ceil(rho) * rho)
    } else {
        (w, h)
    };
    pops::plan_encode(ph, pw, opts.patch, net).stage("planning")
}

/// Encodes through overlapping tiles of `opts.patch` pixels.
pub fn encode_tiled(
    image: &Image,
    net: &NetworkSpec,
    weights: &WeightStore,
    opts: &EncodeOptions,
) -> Result<Encoded> {
    encode_tiled_with_deficit(image, net, weights, opts, 0)
}

/// [`encode_tiled`] with the tile overlap reduced by `deficit` pixels.
/// Any positive deficit breaks equivalence with [`encode_full`].
pub fn encode_tiled_with_deficit(
    image: &Image,
    net: &NetworkSpec,
    weights: &WeightStore,
    opts: &EncodeOptions,
    deficit: usize,
) -> Result<Encoded> {
    check_weights(net, weights)?;
    let (padded, pr, pb) = prepare(image, net.rho_enc(), opts.pad).stage("planning")?;
    let plan =
        pops::plan_encode_with_deficit(padded.height(), padded.width(), opts.patch, net, deficit)
            .stage("planning")?;
    if deficit == 0 {
        pops::verify_plan(&plan).stage("planning")?;
    }
    let (latent, stats) =
        analyze_tiled(&padded, &plan, net, weights, opts.threads).stage("analysis")?;
    drop(padded);
    finish_encode(image, opts, net, weights, (pr, pb), latent, stats)
}

/// Encodes with a single whole-image analysis transform. `opts.patch` is
/// only recorded in the header, so the output is byte-identical to
/// [`encode_tiled`].
pub fn encode_full(
    image: &Image,
    net: &NetworkSpec,
    weights: &WeightStore,
    opts: &EncodeOptions,
) -> Result<Encoded> {
    check_weights(net, weights)?;
    let (padded, pr, pb) = prepare(image, net.rho_enc(), opts.pad).stage("planning")?;
    let (latent, stats) = analyze_full(&padded, net, weights, opts.threads).stage("analysis")?;
    drop(padded);
    finish_encode(image, opts, net, weights, (pr, pb), latent, stats)
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: Image,
    /// Dequantized latent plane.
    pub latent: Tensor,
    pub y: SymbolPlane,
    pub z: SymbolPlane,
    pub rate: RateReport,
    pub bpp: f64,
}

/// Entropy decoding and hyper synthesis shared by both decoders.
fn decode_latent(
    bs: &Bitstream,
    net: &NetworkSpec,
    weights: &WeightStore,
) -> Result<(Tensor, SymbolPlane, SymbolPlane, RateReport)> {
    check_weights(net, weights)?;
    let actual = weights.hash();
    if bs.header.weights_hash != actual {
        return Err(Error::HashMismatch {
            expected: bs.header.weights_hash,
            actual,
        });
    }
    let rho = net.rho_enc();
    let (pw, ph) = (bs.header.padded_width(), bs.header.padded_height());
    if pw % rho != 0 || ph % rho != 0 {
        return Err(Error::Format(format!(
            "padded size {pw}x{ph} is not a multiple of rho={rho}"
        )));
    }
    let (lh, lw, c) = (ph / rho, pw / rho, net.channels);
    let zd = z_dims(c, lh, lw);
    let z_bins = entropy::bins_from_channel_scales(weights.z_scales()?, zd.h, zd.w);
    let z_vals =
        entropy::range_decode(&bs.payload_z, &z_bins, zd.len()).stage("entropy decoding z")?;
    let z_sym = SymbolPlane::new(c, zd.h, zd.w, z_vals)?;
    let z_hat = symbols_tensor(&z_sym)?;
    let (mu, sigma) = hyper_params(net, weights, &z_hat, lh, lw).stage("hyper synthesis")?;
    let y_bins = entropy::bins_from_scales(&sigma);
    let y_vals =
        entropy::range_decode(&bs.payload_y, &y_bins, y_bins.len()).stage("entropy decoding y")?;
    let y_sym = SymbolPlane::new(c, lh, lw, y_vals)?;
    let y_hat = entropy::dequantize(&y_sym, &mu)?;
    let table = entropy::gaussian_tables();
    let rate = RateReport {
        bits_y: entropy::information_bits(table, &y_sym.values, &y_bins),
        bits_z: entropy::information_bits(table, &z_sym.values, &z_bins),
        bytes_y: bs.payload_y.len(),
        bytes_z: bs.payload_z.len(),
    };
    Ok((y_hat, y_sym, z_sym, rate))
}

fn finish_decode(
    bs: &Bitstream,
    raster: Vec<u8>,
    latent: Tensor,
    y: SymbolPlane,
    z: SymbolPlane,
    rate: RateReport,
) -> Result<Decoded> {
    let h = &bs.header;
    let full = Image::new(h.padded_width(), h.padded_height(), raster)?;
    let image = if h.pad_right == 0 && h.pad_bottom == 0 {
        full
    } else {
        full.crop(h.width as usize, h.height as usize)?
    };
    Ok(Decoded {
        bpp: crate::metrics::bpp(bs.len(), image.width(), image.height()),
        image,
        latent,
        y,
        z,
        rate,
    })
}

/// Writes a `(1, 3, h, w)` tensor into an RGB raster at `(top, left)`.
fn paste(raster: &mut [u8], width: usize, t: &Tensor, top: usize, left: usize) {
    let d = t.dims();
    for y in 0..d.h {
        for x in 0..d.w {
            for c in 0..IMAGE_CHANNELS {
                let v = t.get(0, c, y, x);
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                raster[((top + y) * width + left + x) * IMAGE_CHANNELS + c] =
                    (v * 255.0).round() as u8;
            }
        }
    }
}

/// Decodes with the synthesis transform run on haloed latent tiles of
/// `patch / rho` latents, the patch size recorded in the header.
pub fn decode_tiled(
    bs: &Bitstream,
    net: &NetworkSpec,
    weights: &WeightStore,
    threads: usize,
) -> Result<Decoded> {
    with_threads(threads, || {
        let (latent, y, z, rate) = decode_latent(bs, net, weights)?;
        let d = latent.dims();
        let t = (bs.header.patch as usize / net.rho_enc()).max(1);
        let plan = pops::plan_decode(d.h, d.w, t, net).stage("decode planning")?;
        let out_w = bs.header.padded_width();
        let mut raster = vec![0u8; out_w * bs.header.padded_height() * IMAGE_CHANNELS];
        let tiles: Vec<(Tensor, Rect)> = plan
            .tiles
            .par_iter()
            .map(|t| {
                let i = t.input;
                let x = tensor::crop2d(&latent, i.top, i.left, i.height, i.width)?;
                let out = blocks::forward(&net.g_s, weights, &x)?;
                let out =
                    tensor::crop2d(&out, t.crop.top, t.crop.left, t.crop.height, t.crop.width)?;
                Ok((out, t.dst))
            })
            .collect::<Result<_>>()
            .stage("synthesis")?;
        for (out, dst) in &tiles {
            paste(&mut raster, out_w, out, dst.top, dst.left);
        }
        drop(tiles);
        finish_decode(bs, raster, latent, y, z, rate)
    })
}

/// Decodes with one whole-plane synthesis transform.
pub fn decode_full(
    bs: &Bitstream,
    net: &NetworkSpec,
    weights: &WeightStore,
    threads: usize,
) -> Result<Decoded> {
    with_threads(threads, || {
        let (latent, y, z, rate) = decode_latent(bs, net, weights)?;
        let out = blocks::forward(&net.g_s, weights, &latent).stage("synthesis")?;
        let out_w = bs.header.padded_width();
        let mut raster = vec![0u8; out_w * bs.header.padded_height() * IMAGE_CHANNELS];
        let d = out.dims();
        if (d.h, d.w) != (bs.header.padded_height(), out_w) {
            return Err(Error::sizing(
                "g_s",
                format!(
                    "produced {d}, expected {}x{out_w}",
                    bs.header.padded_height()
                ),
            ));
        }
        paste(&mut raster, out_w, &out, 0, 0);
        drop(out);
        finish_decode(bs, raster, latent, y, z, rate)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{build_edrb_network, build_paper_network, init_weights};

    fn small() -> (NetworkSpec, WeightStore) {
        let net = build_paper_network(4);
        let w = init_weights(&net, 7);
        (net, w)
    }

    #[test]
    fn single_tile_matches_full() {
        let (net, w) = small();
        let img = Image::synthetic(128, 128, 1).unwrap();
        let opts = EncodeOptions::default();
        let a = encode_tiled(&img, &net, &w, &opts).unwrap();
        let b = encode_full(&img, &net, &w, &opts).unwrap();
        assert_eq!(a.stats.tiles, 1);
        assert_eq!(a.bitstream.to_bytes(), b.bitstream.to_bytes());
    }

    #[test]
    fn multi_tile_round_trip() {
        let (net, w) = small();
        let img = Image::synthetic(160, 224, 2).unwrap();
        let opts = EncodeOptions {
            patch: 96,
            ..Default::default()
        };
        let a = encode_tiled(&img, &net, &w, &opts).unwrap();
        let b = encode_full(&img, &net, &w, &opts).unwrap();
        assert!(a.latent.bit_eq(&b.latent));
        let bytes = a.bitstream.to_bytes();
        assert_eq!(bytes, b.bitstream.to_bytes());
        let bs = Bitstream::from_bytes(&bytes).unwrap();
        let dt = decode_tiled(&bs, &net, &w, 0).unwrap();
        let df = decode_full(&bs, &net, &w, 0).unwrap();
        assert_eq!(dt.y, a.y);
        assert_eq!(dt.z, a.z);
        assert_eq!(dt.image, df.image);
        assert_eq!((dt.image.width(), dt.image.height()), (160, 224));
    }

    #[test]
    fn padding_is_recorded_and_trimmed() {
        let (net, w) = small();
        let img = Image::synthetic(100, 90, 3).unwrap();
        assert!(encode_tiled(&img, &net, &w, &EncodeOptions::default()).is_err());
        let opts = EncodeOptions {
            pad: true,
            ..Default::default()
        };
        let e = encode_tiled(&img, &net, &w, &opts).unwrap();
        assert_eq!(
            (e.bitstream.header.pad_right, e.bitstream.header.pad_bottom),
            (12, 6)
        );
        let d = decode_tiled(&e.bitstream, &net, &w, 0).unwrap();
        assert_eq!((d.image.width(), d.image.height()), (100, 90));
    }

    #[test]
    fn container_rejections() {
        let (net, w) = small();
        let img = Image::synthetic(128, 128, 4).unwrap();
        let e = encode_full(&img, &net, &w, &EncodeOptions::default()).unwrap();
        let bytes = e.bitstream.to_bytes();
        assert_eq!(&bytes[..4], b"CPS1");
        assert_eq!(bytes.len(), e.bitstream.len());

        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(matches!(
            Bitstream::from_bytes(&bad),
            Err(Error::Checksum { .. })
        ));
        assert!(Bitstream::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(
            Bitstream::from_bytes(&magic),
            Err(Error::Format(_))
        ));

        let other = init_weights(&net, 8);
        assert!(matches!(
            decode_tiled(&e.bitstream, &net, &other, 0),
            Err(Error::HashMismatch { .. })
        ));
    }

    #[test]
    fn edrb_only_tiles_without_overlap() {
        let net = build_edrb_network(4);
        let w = init_weights(&net, 1);
        let img = Image::synthetic(96, 64, 5).unwrap();
        let opts = EncodeOptions {
            patch: 32,
            ..Default::default()
        };
        let a = encode_tiled(&img, &net, &w, &opts).unwrap();
        let b = encode_full(&img, &net, &w, &opts).unwrap();
        assert_eq!(a.bitstream, b.bitstream);
        assert_eq!(a.stats.tiles, 6);
    }

    #[test]
    fn errors_name_the_stage() {
        let (net, w) = small();
        let img = Image::synthetic(100, 100, 0).unwrap();
        let err = encode_tiled(&img, &net, &w, &EncodeOptions::default()).unwrap_err();
        assert!(err.to_string().starts_with("planning"), "{err}");
    }
}
