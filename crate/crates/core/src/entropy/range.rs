//! Byte-oriented range coder: 32-bit range, 64-bit low with carry
//! propagation through a cached byte, 16-bit frequency totals.

use crate::error::{Error, Result};

/// Frequencies of every table sum to `1 << TOTAL_BITS`.
pub const TOTAL_BITS: u32 = 16;
const TOP: u32 = 1 << 24;

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Codes the interval `[start, start + freq)` out of `1 << TOTAL_BITS`.
    pub fn encode(&mut self, start: u32, freq: u32) {
        debug_assert!(freq > 0 && start + freq <= 1 << TOTAL_BITS);
        let r = self.range >> TOTAL_BITS;
        self.low += u64::from(r) * u64::from(start);
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self> {
        if buf.len() < 5 {
            return Err(Error::Corrupt(format!(
                "stream of {} bytes is shorter than the 5-byte flush",
                buf.len()
            )));
        }
        if buf[0] != 0 {
            return Err(Error::Corrupt(
                "first byte of a range-coded stream must be zero".into(),
            ));
        }
        let mut d = RangeDecoder {
            buf,
            pos: 0,
            code: 0,
            range: u32::MAX,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | u32::from(d.next_byte()?);
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.buf.get(self.pos).ok_or_else(|| {
            Error::Corrupt(format!(
                "read past the end of a {}-byte stream",
                self.buf.len()
            ))
        })?;
        self.pos += 1;
        Ok(b)
    }

    /// Decodes one symbol from a cumulative table `cdf` with
    /// `cdf[0] = 0`, `cdf[last] = 1 << TOTAL_BITS`.
    pub fn decode(&mut self, cdf: &[u32]) -> Result<usize> {
        let r = self.range >> TOTAL_BITS;
        let target = self.code / r;
        if target >= 1 << TOTAL_BITS {
            return Err(Error::Corrupt(format!(
                "target {target} beyond total frequency"
            )));
        }
        // last index with cdf[i] <= target
        let sym = cdf.partition_point(|&c| c <= target) - 1;
        let (start, end) = (cdf[sym], cdf[sym + 1]);
        self.code -= r * start;
        self.range = r * (end - start);
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
        }
        Ok(sym)
    }

    /// Fails unless every byte of the stream was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after the last symbol",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
