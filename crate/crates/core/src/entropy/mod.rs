//! Quantization, the Gaussian conditional and factorized hyper-latent
//! models, rate measurement and range coding of symbol planes.

pub mod cdf;
pub mod range;

pub use cdf::{gaussian_cdf_bin, gaussian_tables, Cdf, CdfTable, NUM_BINS, SYMBOL_MAX, SYMBOL_MIN};
pub use range::{RangeDecoder, RangeEncoder};

use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor};

/// Integer symbols over a (c, h, w) grid, with the positions whose
/// residual had to be clamped into range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolPlane {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub values: Vec<i16>,
    pub saturated: Vec<usize>,
}

impl SymbolPlane {
    pub fn new(c: usize, h: usize, w: usize, values: Vec<i16>) -> Result<Self> {
        if values.len() != c * h * w {
            return Err(Error::Contract(format!(
                "{} symbols for a {c}x{h}x{w} plane",
                values.len()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|&&v| i32::from(v) < SYMBOL_MIN || i32::from(v) > SYMBOL_MAX)
        {
            return Err(Error::Contract(format!(
                "symbol {v} outside [{SYMBOL_MIN}, {SYMBOL_MAX}]"
            )));
        }
        Ok(SymbolPlane {
            c,
            h,
            w,
            values,
            saturated: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn single_batch(t: &Tensor, what: &str) -> Result<Dims> {
    let d = t.dims();
    if d.n != 1 {
        return Err(Error::Contract(format!(
            "{what}: expected batch 1, got {d}"
        )));
    }
    Ok(d)
}

/// `clamp(round(y - mu), -128, 127)` elementwise; rounding is half away
/// from zero.
pub fn quantize(y: &Tensor, mu: &Tensor) -> Result<SymbolPlane> {
    let d = single_batch(y, "quantize")?;
    if mu.dims() != d {
        return Err(Error::Contract(format!(
            "quantize: latent {d} and mean {} differ",
            mu.dims()
        )));
    }
    let mut values = Vec::with_capacity(d.len());
    let mut saturated = Vec::new();
    for (i, (&v, &m)) in y.data().iter().zip(mu.data()).enumerate() {
        let q = (v - m).round();
        let clamped = q.clamp(SYMBOL_MIN as f32, SYMBOL_MAX as f32);
        if clamped != q || q.is_nan() {
            saturated.push(i);
        }
        values.push(if q.is_nan() { 0 } else { clamped as i16 });
    }
    Ok(SymbolPlane {
        c: d.c,
        h: d.h,
        w: d.w,
        values,
        saturated,
    })
}

/// `symbol + mu`.
pub fn dequantize(plane: &SymbolPlane, mu: &Tensor) -> Result<Tensor> {
    let d = single_batch(mu, "dequantize")?;
    if (d.c, d.h, d.w) != (plane.c, plane.h, plane.w) {
        return Err(Error::Contract(format!(
            "dequantize: plane {}x{}x{} and mean {d} differ",
            plane.c, plane.h, plane.w
        )));
    }
    let data = plane
        .values
        .iter()
        .zip(mu.data())
        .map(|(&s, &m)| f32::from(s) + m)
        .collect();
    Tensor::from_vec(d, data)
}

/// Table bin for every element of a scale tensor.
pub fn bins_from_scales(sigma: &Tensor) -> Vec<u8> {
    sigma
        .data()
        .iter()
        .map(|&s| gaussian_cdf_bin(s) as u8)
        .collect()
}

/// Bins of the factorized hyper-latent model: one scale per channel,
/// repeated over every position of that channel.
pub fn bins_from_channel_scales(scales: &[f32], h: usize, w: usize) -> Vec<u8> {
    scales
        .iter()
        .flat_map(|&s| std::iter::repeat_n(gaussian_cdf_bin(s) as u8, h * w))
        .collect()
}

fn symbol_index(s: i16) -> usize {
    (i32::from(s) - SYMBOL_MIN) as usize
}

fn check_lengths(symbols: usize, bins: usize) -> Result<()> {
    if symbols != bins {
        return Err(Error::Contract(format!(
            "{symbols} symbols but {bins} bins"
        )));
    }
    Ok(())
}

/// Range-codes `symbols`, symbol `i` under table `bins[i]`.
pub fn range_encode_with(table: &CdfTable, symbols: &[i16], bins: &[u8]) -> Result<Vec<u8>> {
    check_lengths(symbols.len(), bins.len())?;
    let mut enc = RangeEncoder::new();
    for (&s, &b) in symbols.iter().zip(bins) {
        if i32::from(s) < SYMBOL_MIN || i32::from(s) > SYMBOL_MAX {
            return Err(Error::Contract(format!(
                "symbol {s} outside the table support"
            )));
        }
        let (start, freq) = table.get(b as usize).interval(symbol_index(s));
        enc.encode(start, freq);
    }
    Ok(enc.finish())
}

/// Inverse of [`range_encode_with`]. Fails on streams that do not decode
/// to exactly `bins.len()` symbols.
pub fn range_decode_with(table: &CdfTable, bytes: &[u8], bins: &[u8]) -> Result<Vec<i16>> {
    let mut dec = RangeDecoder::new(bytes)?;
    let mut out = Vec::with_capacity(bins.len());
    for &b in bins {
        let idx = dec.decode(table.get(b as usize).as_slice())?;
        out.push((idx as i32 + SYMBOL_MIN) as i16);
    }
    dec.finish()?;
    Ok(out)
}

/// [`range_encode_with`] under the Gaussian tables.
pub fn range_encode(symbols: &[i16], bins: &[u8]) -> Result<Vec<u8>> {
    range_encode_with(gaussian_tables(), symbols, bins)
}

/// [`range_decode_with`] under the Gaussian tables.
pub fn range_decode(bytes: &[u8], bins: &[u8], count: usize) -> Result<Vec<i16>> {
    check_lengths(count, bins.len())?;
    range_decode_with(gaussian_tables(), bytes, bins)
}

/// Information content of `symbols` under the quantized tables, in bits.
pub fn information_bits(table: &CdfTable, symbols: &[i16], bins: &[u8]) -> f64 {
    symbols
        .iter()
        .zip(bins)
        .map(|(&s, &b)| table.get(b as usize).bits(symbol_index(s)))
        .sum()
}

/// Estimated and actual size of one coded payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadRate {
    pub bits: f64,
    pub bytes_actual: usize,
}

/// Sums -log2 p over the Gaussian tables and reports the coded size.
pub fn rate_estimate(symbols: &[i16], bins: &[u8]) -> Result<PayloadRate> {
    let bytes = range_encode(symbols, bins)?;
    Ok(PayloadRate {
        bits: information_bits(gaussian_tables(), symbols, bins),
        bytes_actual: bytes.len(),
    })
}

/// Rate of both latents of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub bits_y: f64,
    pub bits_z: f64,
    pub bytes_y: usize,
    pub bytes_z: usize,
}

impl RateReport {
    pub fn estimated_bits(&self) -> f64 {
        self.bits_y + self.bits_z
    }

    pub fn actual_bits(&self) -> usize {
        8 * (self.bytes_y + self.bytes_z)
    }
}
