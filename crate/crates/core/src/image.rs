//! 8-bit RGB images, binary PPM I/O and conversion to tensors.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::blocks::{SplitMix64, IMAGE_CHANNELS};
use crate::error::{Error, Result};
use crate::tensor::{Dims, Tensor};

/// Interleaved RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height * IMAGE_CHANNELS {
            return Err(Error::Format(format!(
                "{} bytes for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * IMAGE_CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..IMAGE_CHANNELS {
                    data.push(f(y, x, c));
                }
            }
        }
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * IMAGE_CHANNELS + c]
    }

    /// Hex SHA-256 of the dimensions and pixel bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        h.update(&self.data);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Deterministic test image: smooth gradients, a few hard-edged
    /// rectangles and mild noise, all derived from `seed`.
    pub fn synthetic(width: usize, height: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut phase = [0.0f64; IMAGE_CHANNELS];
        for p in &mut phase {
            *p = rng.next_f64() * std::f64::consts::TAU;
        }
        let rects: Vec<(usize, usize, usize, usize, [u8; 3])> = (0..6)
            .map(|_| {
                let y = (rng.next_f64() * height as f64) as usize;
                let x = (rng.next_f64() * width as f64) as usize;
                let h = 1 + (rng.next_f64() * height as f64 / 3.0) as usize;
                let w = 1 + (rng.next_f64() * width as f64 / 3.0) as usize;
                let col = [
                    rng.next_u64() as u8,
                    rng.next_u64() as u8,
                    rng.next_u64() as u8,
                ];
                (y, x, h, w, col)
            })
            .collect();
        let mut noise = SplitMix64::new(seed ^ 0x9E37_79B9_7F4A_7C15);
        Image::from_fn(width, height, |y, x, c| {
            for &(ry, rx, rh, rw, col) in &rects {
                if (ry..ry + rh).contains(&y) && (rx..rx + rw).contains(&x) {
                    return col[c];
                }
            }
            let u = x as f64 / width as f64;
            let v = y as f64 / height as f64;
            let base = 128.0 + 90.0 * (std::f64::consts::TAU * (u + 0.7 * v) + phase[c]).sin();
            let n = (noise.next_f64() - 0.5) * 24.0;
            (base + n).clamp(0.0, 255.0) as u8
        })
    }

    /// Extends to `width x height` by repeating the last row and column.
    pub fn pad_replicate(&self, width: usize, height: usize) -> Result<Image> {
        if width < self.width || height < self.height {
            return Err(Error::Contract(format!(
                "cannot pad {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        Image::from_fn(width, height, |y, x, c| {
            self.pixel(y.min(self.height - 1), x.min(self.width - 1), c)
        })
    }

    pub fn crop(&self, width: usize, height: usize) -> Result<Image> {
        if width > self.width || height > self.height {
            return Err(Error::Contract(format!(
                "cannot crop {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        Image::from_fn(width, height, |y, x, c| self.pixel(y, x, c))
    }

    /// `(1, 3, H, W)` tensor with values `v / 255`.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_fn(
            Dims::new(1, IMAGE_CHANNELS, self.height, self.width),
            |_, c, y, x| f32::from(self.pixel(y, x, c)) / 255.0,
        )
        .expect("image dims are non-empty")
    }

    /// Inverse of [`to_tensor`](Self::to_tensor): `round(clamp(v, 0, 1) * 255)`.
    pub fn from_tensor(t: &Tensor) -> Result<Image> {
        let d = t.dims();
        if d.n != 1 || d.c != IMAGE_CHANNELS {
            return Err(Error::Contract(format!(
                "expected a (1, 3, H, W) tensor, got {d}"
            )));
        }
        Image::from_fn(d.w, d.h, |y, x, c| {
            let v = t.get(0, c, y, x);
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            (v * 255.0).round() as u8
        })
    }

    pub fn read_ppm(r: impl Read) -> Result<Image> {
        let mut r = BufReader::new(r);
        let magic = token(&mut r)?;
        if magic != "P6" {
            return Err(Error::Format(format!(
                "expected a binary PPM (P6), found {magic:?}"
            )));
        }
        let mut field = |name: &str| -> Result<usize> {
            let t = token(&mut r)?;
            t.parse()
                .map_err(|_| Error::Format(format!("bad PPM {name} {t:?}")))
        };
        let width = field("width")?;
        let height = field("height")?;
        let maxval = field("maxval")?;
        if maxval != 255 {
            return Err(Error::Format(format!(
                "PPM maxval {maxval} unsupported, need 255"
            )));
        }
        // exactly one whitespace byte separates the header from the raster
        let mut data = vec![0u8; width * height * IMAGE_CHANNELS];
        r.read_exact(&mut data)
            .map_err(|_| Error::Format(format!("PPM raster shorter than {width}x{height}")))?;
        Image::new(width, height, data)
    }

    pub fn write_ppm(&self, mut w: impl Write) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        Image::read_ppm(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(self.data.len() + 32);
        self.write_ppm(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

/// Next whitespace-delimited header token, skipping `#` comments. Consumes
/// the single delimiter after the token.
fn token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::Format("truncated PPM header".into()));
            }
            return Ok(tok);
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            r.read_until(b'\n', &mut line)?;
        } else if b.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(tok);
            }
        } else {
            tok.push(b as char);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let img = Image::synthetic(7, 5, 3).unwrap();
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n7 5\n255\n"));
        assert_eq!(Image::read_ppm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn ppm_with_comment() {
        let mut buf = b"P6 # made by hand\n2 1\n255\n".to_vec();
        buf.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = Image::read_ppm(&buf[..]).unwrap();
        assert_eq!(img.pixel(0, 1, 2), 6);
    }

    #[test]
    fn ppm_rejections() {
        assert!(Image::read_ppm(&b"P3\n1 1\n255\n1 2 3"[..]).is_err());
        assert!(Image::read_ppm(&b"P6\n1 1\n65535\n\0\0\0\0\0\0"[..]).is_err());
        assert!(Image::read_ppm(&b"P6\n2 2\n255\n\0\0\0"[..]).is_err());
        assert!(Image::read_ppm(&b""[..]).is_err());
    }

    #[test]
    fn tensor_conversion_round_trips() {
        let img = Image::synthetic(9, 4, 1).unwrap();
        assert_eq!(Image::from_tensor(&img.to_tensor()).unwrap(), img);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let t = Tensor::from_vec(Dims::new(1, 3, 1, 1), vec![-0.5, 1.5, f32::NAN]).unwrap();
        assert_eq!(Image::from_tensor(&t).unwrap().data(), &[0, 255, 0]);
    }

    #[test]
    fn pad_then_crop() {
        let img = Image::synthetic(5, 3, 2).unwrap();
        let p = img.pad_replicate(8, 4).unwrap();
        assert_eq!(p.pixel(3, 7, 1), img.pixel(2, 4, 1));
        assert_eq!(p.crop(5, 3).unwrap(), img);
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(
            Image::synthetic(16, 16, 4).unwrap(),
            Image::synthetic(16, 16, 4).unwrap()
        );
        assert_ne!(
            Image::synthetic(16, 16, 4).unwrap(),
            Image::synthetic(16, 16, 5).unwrap()
        );
    }
}
