//! Receptive-field, scale and overlap arithmetic for padding-free stacks.
//!
//! All quantities are exact integers. Closed forms ([`receptive_field`],
//! [`unreachable`], [`overlap`]) are checked against [`footprint`], which
//! propagates index intervals backwards through the actual layer geometry.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    Tconv,
    Pointwise,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Tconv => "tconv",
            LayerKind::Pointwise => "pointwise",
        }
    }
}

/// One padding-free spatial layer: kernel size and stride along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub k: usize,
    pub s: usize,
}

impl LayerSpec {
    pub const fn conv(k: usize, s: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Conv,
            k,
            s,
        }
    }

    pub const fn tconv(k: usize, s: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Tconv,
            k,
            s,
        }
    }

    /// Elementwise layers (activations, 1x1 channel mixing).
    pub const fn pointwise() -> Self {
        LayerSpec {
            kind: LayerKind::Pointwise,
            k: 1,
            s: 1,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k={}, s={})", self.kind.name(), self.k, self.s)
    }
}

/// Closed interval of input indices, `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub lo: usize,
    pub hi: usize,
}

impl Footprint {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn union(self, other: Footprint) -> Footprint {
        Footprint {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn contains(&self, other: &Footprint) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Anything with a one-dimensional size law and a backward dependency map.
pub trait SpatialMap {
    /// Output extent for an input extent of `w_in`.
    fn output_size(&self, w_in: usize) -> Result<usize>;

    /// Input indices that can influence outputs `lo..=hi`, for an input of
    /// extent `w_in`.
    fn input_interval(&self, w_in: usize, out: Footprint) -> Footprint;
}

impl SpatialMap for LayerSpec {
    fn output_size(&self, w_in: usize) -> Result<usize> {
        match self.kind {
            LayerKind::Pointwise => Ok(w_in),
            LayerKind::Conv => {
                if w_in < self.k {
                    Err(Error::sizing(
                        self.to_string(),
                        format!("input size {w_in} is smaller than the kernel"),
                    ))
                } else {
                    Ok((w_in - self.k) / self.s + 1)
                }
            }
            LayerKind::Tconv => {
                if w_in == 0 {
                    Err(Error::sizing(self.to_string(), "empty input"))
                } else {
                    Ok(self.s * (w_in - 1) + self.k)
                }
            }
        }
    }

    fn input_interval(&self, w_in: usize, out: Footprint) -> Footprint {
        match self.kind {
            LayerKind::Pointwise => out,
            LayerKind::Conv => Footprint {
                lo: out.lo * self.s,
                hi: (out.hi * self.s + self.k - 1).min(w_in - 1),
            },
            LayerKind::Tconv => {
                let (k, s) = (self.k as i64, self.s as i64);
                let lo = (out.lo as i64 - k + 1).max(0);
                let lo = (lo + s - 1) / s;
                let hi = (out.hi as i64 / s).min(w_in as i64 - 1);
                Footprint {
                    lo: lo as usize,
                    hi: hi.max(lo) as usize,
                }
            }
        }
    }
}

/// Folds [`SpatialMap::output_size`] over a stack, naming the failing layer.
pub fn chain_sizes<M: SpatialMap>(stack: &[M], w_in: usize) -> Result<Vec<usize>> {
    let mut sizes = Vec::with_capacity(stack.len() + 1);
    sizes.push(w_in);
    let mut w = w_in;
    for (i, layer) in stack.iter().enumerate() {
        w = layer.output_size(w).map_err(|e| match e {
            Error::Sizing { layer, detail } => Error::Sizing {
                layer: format!("layer {i} {layer}"),
                detail,
            },
            other => other,
        })?;
        sizes.push(w);
    }
    Ok(sizes)
}

/// Output size after every layer of `stack`: floor((w - k) / s) + 1 for
/// convolutions, s * (w - 1) + k for transposed convolutions.
pub fn out_size<M: SpatialMap>(stack: &[M], w_in: usize) -> Result<usize> {
    Ok(*chain_sizes(stack, w_in)?.last().expect("non-empty"))
}

/// Interval of input indices that can influence outputs `out` of the stack.
pub fn footprint_range<M: SpatialMap>(
    stack: &[M],
    w_in: usize,
    out: Footprint,
) -> Result<Footprint> {
    let sizes = chain_sizes(stack, w_in)?;
    let w_out = *sizes.last().expect("non-empty");
    if out.lo > out.hi || out.hi >= w_out {
        return Err(Error::Index {
            index: out.hi,
            size: w_out,
        });
    }
    let mut iv = out;
    for (layer, &w) in stack.iter().zip(&sizes).rev() {
        iv = layer.input_interval(w, iv);
    }
    Ok(iv)
}

/// Interval of input indices that can influence output `out_index`.
pub fn footprint<M: SpatialMap>(stack: &[M], w_in: usize, out_index: usize) -> Result<Footprint> {
    footprint_range(
        stack,
        w_in,
        Footprint {
            lo: out_index,
            hi: out_index,
        },
    )
}

/// Receptive field by the recursion r_l = r_{l-1} + (k_l - 1) * prod_{i<l} s_i.
///
/// A stride-1 transposed convolution is a correlation with a flipped
/// kernel and counts like a convolution; strided transposed layers are
/// rejected.
pub fn receptive_field(stack: &[LayerSpec]) -> Result<usize> {
    let mut r = 1;
    let mut jump = 1;
    for (index, layer) in stack.iter().enumerate() {
        if layer.kind == LayerKind::Tconv && layer.s != 1 {
            return Err(Error::UnsupportedLayer {
                index,
                kind: "tconv",
                hint:
                    "strided transposed layers have no receptive-field recursion; use footprint()",
            });
        }
        r += (layer.k - 1) * jump;
        jump *= layer.s;
    }
    Ok(r)
}

/// Cumulative stride product.
pub fn scale_factor(stack: &[LayerSpec]) -> usize {
    stack.iter().map(|l| l.s).product()
}

/// Feature pixels whose receptive field fits entirely in a patch of `w_p`.
pub fn valid_feature_count(w_p: usize, r: usize, rho: usize) -> Result<usize> {
    if w_p < r {
        return Err(Error::PatchTooSmall {
            patch: w_p,
            receptive_field: r,
        });
    }
    Ok((w_p - r) / rho + 1)
}

/// Unreachable feature pixels per patch, both sides combined: ceil(r / rho) - 1.
pub fn unreachable(r: usize, rho: usize) -> usize {
    r.div_ceil(rho) - 1
}

/// Image-domain overlap between consecutive patches.
pub fn overlap(r: usize, rho: usize) -> usize {
    if r.is_multiple_of(rho) {
        r - rho
    } else {
        rho * (r / rho)
    }
}

/// Everything the tiler needs about an encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackSummary {
    pub r: usize,
    pub rho: usize,
    pub two_e: usize,
    pub o: usize,
    /// `w_p - o`, when a patch size was supplied.
    pub step: Option<usize>,
}

pub fn summarize(stack: &[LayerSpec], patch: Option<usize>) -> Result<StackSummary> {
    let r = receptive_field(stack)?;
    let rho = scale_factor(stack);
    let o = overlap(r, rho);
    let step = match patch {
        Some(w_p) if w_p <= o => {
            return Err(Error::plan(format!(
                "patch size {w_p} must exceed the overlap {o}"
            )))
        }
        Some(w_p) => Some(w_p - o),
        None => None,
    };
    Ok(StackSummary {
        r,
        rho,
        two_e: unreachable(r, rho),
        o,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOWN: LayerSpec = LayerSpec::conv(2, 2);

    #[test]
    fn receptive_field_cases() {
        assert_eq!(receptive_field(&[]).unwrap(), 1);
        assert_eq!(receptive_field(&[DOWN; 4]).unwrap(), 16);
        assert_eq!(
            receptive_field(&[LayerSpec::conv(3, 1), LayerSpec::tconv(3, 1)]).unwrap(),
            5
        );
        assert!(matches!(
            receptive_field(&[DOWN, LayerSpec::tconv(2, 2)]),
            Err(Error::UnsupportedLayer { index: 1, .. })
        ));
    }

    #[test]
    fn scale_factor_cases() {
        assert_eq!(scale_factor(&[DOWN; 4]), 16);
        assert_eq!(scale_factor(&[]), 1);
        assert_eq!(
            scale_factor(&[
                LayerSpec::conv(2, 2),
                LayerSpec::conv(3, 1),
                LayerSpec::conv(2, 2)
            ]),
            4
        );
    }

    #[test]
    fn valid_feature_cases() {
        assert_eq!(valid_feature_count(256, 72, 16).unwrap(), 12);
        assert_eq!(valid_feature_count(72, 72, 16).unwrap(), 1);
        assert_eq!(valid_feature_count(128, 72, 16).unwrap(), 4);
        assert!(matches!(
            valid_feature_count(64, 72, 16),
            Err(Error::PatchTooSmall { .. })
        ));
    }

    #[test]
    fn unreachable_and_overlap_cases() {
        assert_eq!(unreachable(72, 16), 4);
        assert_eq!(unreachable(16, 16), 0);
        assert_eq!(unreachable(5, 1), 4);
        assert_eq!(overlap(72, 16), 64);
        assert_eq!(overlap(16, 16), 0);
        assert_eq!(overlap(5, 1), 4);
    }

    #[test]
    fn out_size_cases() {
        assert_eq!(out_size(&[DOWN], 256).unwrap(), 128);
        assert_eq!(
            out_size(&[LayerSpec::conv(3, 1), LayerSpec::tconv(3, 1)], 10).unwrap(),
            10
        );
        match out_size(&[DOWN, LayerSpec::conv(5, 1)], 8) {
            Err(Error::Sizing { layer, .. }) => assert!(layer.starts_with("layer 1"), "{layer}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn footprint_cases() {
        assert_eq!(
            footprint(&[LayerSpec::conv(3, 1)], 10, 0).unwrap(),
            Footprint { lo: 0, hi: 2 }
        );
        assert_eq!(
            footprint(&[LayerSpec::tconv(3, 1)], 4, 0).unwrap(),
            Footprint { lo: 0, hi: 0 }
        );
        // interior output of a stride-2 transposed layer sees one input
        assert_eq!(
            footprint(&[LayerSpec::tconv(2, 2)], 4, 5).unwrap(),
            Footprint { lo: 2, hi: 2 }
        );
        assert!(matches!(
            footprint(&[LayerSpec::conv(3, 1)], 10, 8),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn summary_rejects_patch_not_exceeding_overlap() {
        let stack = [LayerSpec::conv(3, 1), LayerSpec::conv(3, 1)];
        let s = summarize(&stack, Some(8)).unwrap();
        assert_eq!((s.r, s.rho, s.two_e, s.o, s.step), (5, 1, 4, 4, Some(4)));
        assert!(summarize(&stack, Some(4)).is_err());
    }
}
