//! Discretized Gaussian tables.
//!
//! 64 scale bins log-spaced over [0.11, 64]. For each bin the mass of every
//! integer symbol in [-128, 127] is integrated from the Gaussian CDF, tails
//! folded into the two extreme symbols, then rounded to 16-bit frequencies
//! with every symbol given at least one count. `libm` is used for `erfc`
//! and `log` so tables are identical on every platform.

use std::sync::OnceLock;

use super::range::TOTAL_BITS;
use crate::error::{Error, Result};

pub const NUM_BINS: usize = 64;
pub const SIGMA_MIN: f64 = 0.11;
pub const SIGMA_MAX: f64 = 64.0;
pub const SYMBOL_MIN: i32 = -128;
pub const SYMBOL_MAX: i32 = 127;
pub const NUM_SYMBOLS: usize = (SYMBOL_MAX - SYMBOL_MIN + 1) as usize;
pub const TOTAL: u32 = 1 << TOTAL_BITS;

/// Cumulative frequencies, `NUM_SYMBOLS + 1` entries from 0 to [`TOTAL`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cdf(Vec<u32>);

impl Cdf {
    /// Builds from per-symbol frequencies that are all positive and sum
    /// to [`TOTAL`].
    pub fn from_frequencies(freqs: &[u32]) -> Result<Self> {
        if freqs.contains(&0) {
            return Err(Error::Contract(
                "every symbol needs a non-zero frequency".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(freqs.len() + 1);
        cdf.push(0);
        let mut acc = 0u32;
        for &f in freqs {
            acc += f;
            cdf.push(acc);
        }
        if acc != TOTAL {
            return Err(Error::Contract(format!(
                "frequencies sum to {acc}, not {TOTAL}"
            )));
        }
        Ok(Cdf(cdf))
    }

    pub fn uniform(symbols: usize) -> Result<Self> {
        if symbols == 0 || !(TOTAL as usize).is_multiple_of(symbols) {
            return Err(Error::Contract(format!(
                "{symbols} does not divide {TOTAL}"
            )));
        }
        Self::from_frequencies(&vec![TOTAL / symbols as u32; symbols])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn symbols(&self) -> usize {
        self.0.len() - 1
    }

    /// `(start, freq)` of symbol index `i`.
    pub fn interval(&self, i: usize) -> (u32, u32) {
        (self.0[i], self.0[i + 1] - self.0[i])
    }

    /// -log2 of the quantized probability of symbol index `i`.
    pub fn bits(&self, i: usize) -> f64 {
        let (_, f) = self.interval(i);
        f64::from(TOTAL_BITS) - libm::log2(f64::from(f))
    }
}

/// Indexed set of tables; symbol `s` maps to index `s - SYMBOL_MIN`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    cdfs: Vec<Cdf>,
}

impl CdfTable {
    pub fn new(cdfs: Vec<Cdf>) -> Self {
        CdfTable { cdfs }
    }

    pub fn get(&self, bin: usize) -> &Cdf {
        &self.cdfs[bin]
    }

    pub fn len(&self) -> usize {
        self.cdfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdfs.is_empty()
    }
}

fn log_step() -> f64 {
    (libm::log(SIGMA_MAX) - libm::log(SIGMA_MIN)) / (NUM_BINS - 1) as f64
}

/// Scale represented by `bin`.
pub fn bin_sigma(bin: usize) -> f64 {
    libm::exp(libm::log(SIGMA_MIN) + bin as f64 * log_step())
}

/// Nearest bin in log space; scales at or below the floor (and NaN) map to
/// bin 0, scales above the ceiling to the last bin.
pub fn gaussian_cdf_bin(sigma: f32) -> usize {
    let s = f64::from(sigma);
    if s.is_nan() || s <= SIGMA_MIN {
        return 0;
    }
    let t = (libm::log(s) - libm::log(SIGMA_MIN)) / log_step();
    (libm::round(t) as usize).min(NUM_BINS - 1)
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability of every symbol under a zero-mean Gaussian of scale `sigma`,
/// tails folded into the extremes.
pub fn symbol_probabilities(sigma: f64) -> Vec<f64> {
    (SYMBOL_MIN..=SYMBOL_MAX)
        .map(|s| {
            let s = f64::from(s);
            if s == f64::from(SYMBOL_MIN) {
                phi((s + 0.5) / sigma)
            } else if s == f64::from(SYMBOL_MAX) {
                phi(-(s - 0.5) / sigma)
            } else {
                phi((s + 0.5) / sigma) - phi((s - 0.5) / sigma)
            }
        })
        .collect()
}

/// Rounds probabilities to frequencies summing to [`TOTAL`], each >= 1.
/// Leftover counts go to the largest fractional remainders, lowest index
/// first on ties.
pub fn quantize_probabilities(probs: &[f64]) -> Cdf {
    let n = probs.len();
    let spare = f64::from(TOTAL - n as u32);
    let mut freqs = Vec::with_capacity(n);
    let mut rema = Vec::with_capacity(n);
    for (i, &p) in probs.iter().enumerate() {
        let scaled = p.max(0.0) * spare;
        let fl = libm::floor(scaled);
        freqs.push(1 + fl as u32);
        rema.push((scaled - fl, i));
    }
    let assigned: u32 = freqs.iter().sum();
    let left = (TOTAL - assigned) as usize;
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(left) {
        freqs[i] += 1;
    }
    Cdf::from_frequencies(&freqs).expect("quantized frequencies are valid")
}

pub fn build_tables() -> CdfTable {
    CdfTable::new(
        (0..NUM_BINS)
            .map(|b| quantize_probabilities(&symbol_probabilities(bin_sigma(b))))
            .collect(),
    )
}

/// Process-wide Gaussian tables, built on first use.
pub fn gaussian_tables() -> &'static CdfTable {
    static TABLES: OnceLock<CdfTable> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_log_spaced_and_clamped() {
        assert!((bin_sigma(0) - SIGMA_MIN).abs() < 1e-12);
        assert!((bin_sigma(NUM_BINS - 1) - SIGMA_MAX).abs() < 1e-9);
        assert_eq!(gaussian_cdf_bin(0.01), 0);
        assert_eq!(gaussian_cdf_bin(-3.0), 0);
        assert_eq!(gaussian_cdf_bin(f32::NAN), 0);
        assert_eq!(gaussian_cdf_bin(1e6), NUM_BINS - 1);
        for b in 0..NUM_BINS {
            assert_eq!(gaussian_cdf_bin(bin_sigma(b) as f32), b);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        for b in 0..NUM_BINS {
            let s: f64 = symbol_probabilities(bin_sigma(b)).iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "bin {b}: {s}");
        }
    }

    #[test]
    fn tables_are_monotone_with_full_mass() {
        let t = gaussian_tables();
        assert_eq!(t.len(), NUM_BINS);
        for b in 0..NUM_BINS {
            let c = t.get(b).as_slice();
            assert_eq!(c.len(), NUM_SYMBOLS + 1);
            assert_eq!(c[0], 0);
            assert_eq!(c[NUM_SYMBOLS], TOTAL);
            assert!(c.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn half_probability_is_one_bit() {
        let mut f = vec![1u32; 256];
        f[0] = TOTAL / 2;
        f[1] = TOTAL / 2 - 254;
        let cdf = Cdf::from_frequencies(&f).unwrap();
        assert_eq!(cdf.bits(0), 1.0);
    }
}
