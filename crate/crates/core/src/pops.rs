//! Parallel overlapping patch stitching: tile plans for the encoder and the
//! decoder, with coverage proofs.
//!
//! Encoder tiles are `w_p x w_p` patches placed every `w_p - o` pixels.
//! Each tile keeps only the latent pixels whose complete footprint lies
//! inside the patch; the kept windows partition the full latent grid, so
//! stitching them reproduces the whole-image latent exactly.
//!
//! Decoder tiles split the latent grid into cores, extend every core by a
//! halo, run the synthesis transform on the haloed tile and crop the
//! output back to the core.

use std::fmt;
use std::str::FromStr;

use crate::blocks::NetworkSpec;
use crate::calculus::{self, Footprint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub const fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Rect {
            top,
            left,
            height,
            width,
        }
    }

    pub const fn bottom(&self) -> usize {
        self.top + self.height
    }

    pub const fn right(&self) -> usize {
        self.left + self.width
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.top, self.left, self.height, self.width
        )
    }
}

impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("bad rect {s:?}")))?;
        match v[..] {
            [top, left, height, width] => Ok(Rect::new(top, left, height, width)),
            _ => Err(Error::Format(format!("bad rect {s:?}"))),
        }
    }
}

/// One encoder tile. `src` is in image pixels, `keep` in the tile's own
/// latent grid, `dst` in the full latent grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
    pub src: Rect,
    pub keep: Rect,
    pub dst: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub height: usize,
    pub width: usize,
    pub patch: usize,
    /// Overlap the network requires.
    pub overlap: usize,
    /// Step actually used between tile origins.
    pub step: usize,
    pub rho: usize,
    pub latent_h: usize,
    pub latent_w: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub tiles: Vec<Tile>,
}

/// 1-D tile: origin and length in pixels, kept latent window (local) and
/// its position in the full latent axis.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    len: usize,
    keep_start: usize,
    keep_len: usize,
    dst: usize,
}

/// Latent pixels at each edge of a `patch`-wide tile whose footprint
/// leaves the tile. Derived from the footprint oracle on a wider input so
/// nothing is clipped.
fn edge_deficits(net: &NetworkSpec, patch: usize, rho: usize) -> Result<(usize, usize)> {
    let latent = calculus::out_size(&net.g_a, patch)?;
    let margin = net.r_enc().div_ceil(rho) * rho;
    let wide = patch + 2 * margin;
    let shift = margin / rho;
    let mut valid = Vec::new();
    for j in 0..latent {
        let fp = calculus::footprint(&net.g_a, wide, j + shift)?;
        if fp.lo >= margin && fp.hi < margin + patch {
            valid.push(j);
        }
    }
    match (valid.first(), valid.last()) {
        (Some(&first), Some(&last)) => Ok((first, latent - 1 - last)),
        _ => Err(Error::PatchTooSmall {
            patch,
            receptive_field: net.r_enc(),
        }),
    }
}

fn plan_axis(dim: usize, patch: usize, step: usize, drop_right: usize, rho: usize) -> Vec<Span> {
    if dim <= patch {
        return vec![Span {
            start: 0,
            len: dim,
            keep_start: 0,
            keep_len: dim / rho,
            dst: 0,
        }];
    }
    let mut starts = vec![0];
    loop {
        let last = *starts.last().expect("non-empty");
        if last + patch >= dim {
            break;
        }
        let next = last + step;
        if next + patch > dim {
            // clamped tail: snap the final tile to the far edge
            starts.push(dim - patch);
            break;
        }
        starts.push(next);
    }
    let latent = patch / rho;
    let mut spans = Vec::with_capacity(starts.len());
    let mut next_dst = 0;
    for (i, &start) in starts.iter().enumerate() {
        let origin = start / rho;
        let keep_start = next_dst - origin;
        let keep_end = if i + 1 == starts.len() {
            latent
        } else {
            latent - drop_right
        };
        let keep_len = keep_end.saturating_sub(keep_start);
        spans.push(Span {
            start,
            len: patch,
            keep_start,
            keep_len,
            dst: next_dst,
        });
        next_dst += keep_len;
    }
    debug_assert_eq!(next_dst, dim / rho);
    spans
}

/// Plans encoder tiles with the network's own overlap.
pub fn plan_encode(
    height: usize,
    width: usize,
    patch: usize,
    net: &NetworkSpec,
) -> Result<TilePlan> {
    plan_encode_with_deficit(height, width, patch, net, 0)
}

/// Plans encoder tiles with the overlap reduced by `deficit` pixels (a
/// multiple of rho). A positive deficit produces a plan that still
/// partitions the latent grid but violates the step bound; it exists to
/// probe how tight that bound is.
pub fn plan_encode_with_deficit(
    height: usize,
    width: usize,
    patch: usize,
    net: &NetworkSpec,
    deficit: usize,
) -> Result<TilePlan> {
    let summary = net.summary(None)?;
    let rho = summary.rho;
    for (what, v) in [("height", height), ("width", width), ("patch size", patch)] {
        if v == 0 || v % rho != 0 {
            return Err(Error::plan(format!(
                "{what} {v} must be a positive multiple of rho={rho}"
            )));
        }
    }
    if !deficit.is_multiple_of(rho) || deficit > summary.o {
        return Err(Error::plan(format!(
            "overlap deficit {deficit} must be a multiple of rho={rho} no larger than o={}",
            summary.o
        )));
    }
    let used = summary.o - deficit;
    let multi = height > patch || width > patch;
    if multi && patch < summary.o + rho {
        return Err(Error::plan(format!(
            "patch size {patch} must be at least o + rho = {}",
            summary.o + rho
        )));
    }
    for dim in [height.min(patch), width.min(patch)] {
        let latent = calculus::out_size(&net.g_a, dim).map_err(|e| {
            Error::plan(format!(
                "analysis transform rejects a {dim}-pixel tile: {e}"
            ))
        })?;
        if latent * rho != dim {
            return Err(Error::plan(format!(
                "analysis transform maps {dim} pixels to {latent} latents, not {}",
                dim / rho
            )));
        }
    }
    let mut drop_right = 0;
    if multi {
        let (need_left, need_right) = edge_deficits(net, patch, rho)?;
        if need_left + need_right > summary.two_e {
            return Err(Error::plan(format!(
                "tile edges lose {need_left}+{need_right} latents but the overlap only hides {}",
                summary.two_e
            )));
        }
        let two_e = used / rho;
        // the left edge takes what it needs, the right edge the rest
        drop_right = two_e - need_left.min(two_e);
    }
    let step = patch - used;
    let rows = plan_axis(height, patch, step, drop_right, rho);
    let cols = plan_axis(width, patch, step, drop_right, rho);
    let mut tiles = Vec::with_capacity(rows.len() * cols.len());
    for (r, ry) in rows.iter().enumerate() {
        for (c, cx) in cols.iter().enumerate() {
            tiles.push(Tile {
                row: r,
                col: c,
                src: Rect::new(ry.start, cx.start, ry.len, cx.len),
                keep: Rect::new(ry.keep_start, cx.keep_start, ry.keep_len, cx.keep_len),
                dst: Rect::new(ry.dst, cx.dst, ry.keep_len, cx.keep_len),
            });
        }
    }
    Ok(TilePlan {
        height,
        width,
        patch,
        overlap: summary.o,
        step,
        rho,
        latent_h: height / rho,
        latent_w: width / rho,
        rows: rows.len(),
        cols: cols.len(),
        tiles,
    })
}

/// Outcome of [`verify_plan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofReport {
    pub tiles: usize,
    pub latent_pixels: usize,
    pub max_step: usize,
    pub step_bound: usize,
}

impl fmt::Display for ProofReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "partition: ok ({} latent pixels, {} tiles)\nstep bound: ok (max step {} <= {})",
            self.latent_pixels, self.tiles, self.max_step, self.step_bound
        )
    }
}

/// Checks that kept windows partition the latent grid exactly once and
/// that no step between neighbouring tiles exceeds `patch - overlap`.
pub fn verify_plan(plan: &TilePlan) -> Result<ProofReport> {
    let violation = |row, col, detail: String| Error::PlanViolation { row, col, detail };
    let (lh, lw, rho) = (plan.latent_h, plan.latent_w, plan.rho);
    if plan.tiles.len() != plan.rows * plan.cols {
        return Err(violation(
            0,
            0,
            format!(
                "{} tiles for a {}x{} grid",
                plan.tiles.len(),
                plan.rows,
                plan.cols
            ),
        ));
    }
    let mut cover = vec![0u8; lh * lw];
    for t in &plan.tiles {
        if t.src.bottom() > plan.height || t.src.right() > plan.width {
            return Err(violation(
                t.src.top,
                t.src.left,
                format!("tile {} lies outside the image", t.src),
            ));
        }
        if t.src.height != plan.patch.min(plan.height) || t.src.width != plan.patch.min(plan.width)
        {
            return Err(violation(
                t.src.top,
                t.src.left,
                format!("tile {} is not patch-sized", t.src),
            ));
        }
        if t.keep.height != t.dst.height
            || t.keep.width != t.dst.width
            || t.keep.bottom() * rho > t.src.height
            || t.keep.right() * rho > t.src.width
            || t.src.top / rho + t.keep.top != t.dst.top
            || t.src.left / rho + t.keep.left != t.dst.left
        {
            return Err(violation(
                t.src.top,
                t.src.left,
                format!(
                    "keep {} and dst {} disagree for tile {}",
                    t.keep, t.dst, t.src
                ),
            ));
        }
        for y in t.dst.top..t.dst.bottom() {
            for x in t.dst.left..t.dst.right() {
                if y >= lh || x >= lw {
                    return Err(violation(
                        y,
                        x,
                        "kept latent outside the latent grid".into(),
                    ));
                }
                if cover[y * lw + x] != 0 {
                    return Err(violation(y, x, "latent pixel kept by two tiles".into()));
                }
                cover[y * lw + x] = 1;
            }
        }
    }
    if let Some(pos) = cover.iter().position(|&c| c == 0) {
        return Err(violation(
            pos / lw,
            pos % lw,
            "latent pixel kept by no tile".into(),
        ));
    }
    let bound = plan.patch.saturating_sub(plan.overlap);
    let mut max_step = 0;
    for t in &plan.tiles {
        let (r, c) = (t.row, t.col);
        let pairs = [
            (c > 0).then(|| {
                (
                    &plan.tiles[r * plan.cols + c - 1],
                    t.src.left - plan.tiles[r * plan.cols + c - 1].src.left,
                )
            }),
            (r > 0).then(|| {
                (
                    &plan.tiles[(r - 1) * plan.cols + c],
                    t.src.top - plan.tiles[(r - 1) * plan.cols + c].src.top,
                )
            }),
        ];
        for (_, step) in pairs.into_iter().flatten() {
            max_step = max_step.max(step);
            if step > bound {
                return Err(violation(
                    t.src.top,
                    t.src.left,
                    format!("step {step} exceeds the bound patch - overlap = {bound}"),
                ));
            }
        }
    }
    Ok(ProofReport {
        tiles: plan.tiles.len(),
        latent_pixels: lh * lw,
        max_step,
        step_bound: bound,
    })
}

impl TilePlan {
    /// Image rows and columns where two tiles' kept regions meet.
    pub fn seams(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rows: Vec<usize> = self
            .tiles
            .iter()
            .map(|t| t.dst.top * self.rho)
            .filter(|&v| v > 0)
            .collect();
        let mut cols: Vec<usize> = self
            .tiles
            .iter()
            .map(|t| t.dst.left * self.rho)
            .filter(|&v| v > 0)
            .collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        (rows, cols)
    }
}

const PLAN_HEADER: &str = "cps-tile-plan v1";

impl fmt::Display for TilePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{PLAN_HEADER}")?;
        writeln!(f, "height={}", self.height)?;
        writeln!(f, "width={}", self.width)?;
        writeln!(f, "patch={}", self.patch)?;
        writeln!(f, "overlap={}", self.overlap)?;
        writeln!(f, "step={}", self.step)?;
        writeln!(f, "rho={}", self.rho)?;
        writeln!(f, "latent={}x{}", self.latent_h, self.latent_w)?;
        writeln!(f, "grid={}x{}", self.rows, self.cols)?;
        for t in &self.tiles {
            writeln!(
                f,
                "tile r={} c={} src={} keep={} dst={}",
                t.row, t.col, t.src, t.keep, t.dst
            )?;
        }
        Ok(())
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| Error::Format(format!("expected AxB, got {s:?}")))?;
    let num = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad number {v:?}")))
    };
    Ok((num(a)?, num(b)?))
}

impl FromStr for TilePlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(PLAN_HEADER) {
            return Err(Error::Format("missing tile-plan header".into()));
        }
        let mut plan = TilePlan {
            height: 0,
            width: 0,
            patch: 0,
            overlap: 0,
            step: 0,
            rho: 0,
            latent_h: 0,
            latent_w: 0,
            rows: 0,
            cols: 0,
            tiles: Vec::new(),
        };
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad number {v:?}")))
        };
        for line in lines {
            if let Some(rest) = line.strip_prefix("tile ") {
                let mut t = Tile {
                    row: 0,
                    col: 0,
                    src: Rect::new(0, 0, 0, 0),
                    keep: Rect::new(0, 0, 0, 0),
                    dst: Rect::new(0, 0, 0, 0),
                };
                for field in rest.split_whitespace() {
                    let (k, v) = field
                        .split_once('=')
                        .ok_or_else(|| Error::Format(format!("bad tile field {field:?}")))?;
                    match k {
                        "r" => t.row = num(v)?,
                        "c" => t.col = num(v)?,
                        "src" => t.src = v.parse()?,
                        "keep" => t.keep = v.parse()?,
                        "dst" => t.dst = v.parse()?,
                        _ => return Err(Error::Format(format!("unknown tile field {k:?}"))),
                    }
                }
                plan.tiles.push(t);
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad line {line:?}")))?;
            match k.trim() {
                "height" => plan.height = num(v)?,
                "width" => plan.width = num(v)?,
                "patch" => plan.patch = num(v)?,
                "overlap" => plan.overlap = num(v)?,
                "step" => plan.step = num(v)?,
                "rho" => plan.rho = num(v)?,
                "latent" => (plan.latent_h, plan.latent_w) = parse_pair(v)?,
                "grid" => (plan.rows, plan.cols) = parse_pair(v)?,
                other => return Err(Error::Format(format!("unknown key {other:?}"))),
            }
        }
        if plan.rho == 0 {
            return Err(Error::Format("rho missing".into()));
        }
        Ok(plan)
    }
}

/// One decoder tile. `input` is in latent pixels, `crop` in the tile's
/// output, `dst` in the output image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeTile {
    pub row: usize,
    pub col: usize,
    pub input: Rect,
    pub crop: Rect,
    pub dst: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodePlan {
    pub latent_h: usize,
    pub latent_w: usize,
    pub tile_latent: usize,
    /// Latent pixels added on each interior side of a core.
    pub halo: usize,
    /// Output pixels dropped on each interior side, `rho * halo`.
    pub crop: usize,
    pub rho: usize,
    pub rows: usize,
    pub cols: usize,
    pub tiles: Vec<DecodeTile>,
}

fn cores(n: usize, t: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(t).map(|s| (s, (s + t).min(n))).collect()
}

/// Halo each core needs along one axis of length `n`.
fn axis_halo(net: &NetworkSpec, n: usize, t: usize, rho: usize) -> Result<usize> {
    let mut halo = 0;
    for (s, e) in cores(n, t) {
        let fp = calculus::footprint_range(
            &net.g_s,
            n,
            Footprint {
                lo: s * rho,
                hi: e * rho - 1,
            },
        )?;
        halo = halo
            .max(s.saturating_sub(fp.lo))
            .max(fp.hi.saturating_sub(e - 1));
    }
    Ok(halo)
}

/// Plans tiled synthesis over an `latent_h x latent_w` grid with square
/// cores of `tile_latent` latent pixels. The halo is the smallest that
/// puts every retained output pixel's footprint inside its tile.
pub fn plan_decode(
    latent_h: usize,
    latent_w: usize,
    tile_latent: usize,
    net: &NetworkSpec,
) -> Result<DecodePlan> {
    if tile_latent == 0 || latent_h == 0 || latent_w == 0 {
        return Err(Error::plan(
            "decode tiles and latent grid must be non-empty",
        ));
    }
    let rho = calculus::out_size(&net.g_s, latent_h.max(latent_w))
        .map_err(|e| Error::plan(format!("synthesis transform rejects the latent grid: {e}")))?
        / latent_h.max(latent_w);
    let halo = axis_halo(net, latent_h, tile_latent, rho)?.max(axis_halo(
        net,
        latent_w,
        tile_latent,
        rho,
    )?);
    let row_cores = cores(latent_h, tile_latent);
    let col_cores = cores(latent_w, tile_latent);
    let extend = |(s, e): (usize, usize), n: usize| {
        let lo = s.saturating_sub(halo);
        let hi = (e + halo).min(n);
        (lo, hi)
    };
    let mut tiles = Vec::with_capacity(row_cores.len() * col_cores.len());
    for (r, &rc) in row_cores.iter().enumerate() {
        for (c, &cc) in col_cores.iter().enumerate() {
            let (y0, y1) = extend(rc, latent_h);
            let (x0, x1) = extend(cc, latent_w);
            for len in [y1 - y0, x1 - x0] {
                let out = calculus::out_size(&net.g_s, len).map_err(|e| {
                    Error::plan(format!(
                        "no feasible halo: a {len}-latent tile is too small for the synthesis transform ({e})"
                    ))
                })?;
                if out != rho * len {
                    return Err(Error::plan(format!(
                        "synthesis maps {len} latents to {out} pixels, not {}",
                        rho * len
                    )));
                }
            }
            tiles.push(DecodeTile {
                row: r,
                col: c,
                input: Rect::new(y0, x0, y1 - y0, x1 - x0),
                crop: Rect::new(
                    (rc.0 - y0) * rho,
                    (cc.0 - x0) * rho,
                    (rc.1 - rc.0) * rho,
                    (cc.1 - cc.0) * rho,
                ),
                dst: Rect::new(
                    rc.0 * rho,
                    cc.0 * rho,
                    (rc.1 - rc.0) * rho,
                    (cc.1 - cc.0) * rho,
                ),
            });
        }
    }
    Ok(DecodePlan {
        latent_h,
        latent_w,
        tile_latent,
        halo,
        crop: rho * halo,
        rho,
        rows: row_cores.len(),
        cols: col_cores.len(),
        tiles,
    })
}

/// Checks that crops partition the output and that every retained output
/// pixel depends only on latents inside its tile.
pub fn verify_decode_plan(plan: &DecodePlan, net: &NetworkSpec) -> Result<ProofReport> {
    let (oh, ow) = (plan.latent_h * plan.rho, plan.latent_w * plan.rho);
    let mut cover = vec![0u8; oh * ow];
    for t in &plan.tiles {
        for y in t.dst.top..t.dst.bottom() {
            for x in t.dst.left..t.dst.right() {
                if y >= oh || x >= ow || cover[y * ow + x] != 0 {
                    return Err(Error::PlanViolation {
                        row: y,
                        col: x,
                        detail: "output pixel covered twice or out of range".into(),
                    });
                }
                cover[y * ow + x] = 1;
            }
        }
        let axes = [
            (
                t.dst.top,
                t.dst.height,
                t.input.top,
                t.input.height,
                plan.latent_h,
            ),
            (
                t.dst.left,
                t.dst.width,
                t.input.left,
                t.input.width,
                plan.latent_w,
            ),
        ];
        for (d0, dlen, i0, ilen, n) in axes {
            let fp = calculus::footprint_range(
                &net.g_s,
                n,
                Footprint {
                    lo: d0,
                    hi: d0 + dlen - 1,
                },
            )?;
            if fp.lo < i0 || fp.hi >= i0 + ilen {
                return Err(Error::PlanViolation {
                    row: t.dst.top,
                    col: t.dst.left,
                    detail: format!(
                        "retained output depends on latents {}..={} outside the tile input {}..{}",
                        fp.lo,
                        fp.hi,
                        i0,
                        i0 + ilen
                    ),
                });
            }
        }
    }
    if let Some(pos) = cover.iter().position(|&c| c == 0) {
        return Err(Error::PlanViolation {
            row: pos / ow,
            col: pos % ow,
            detail: "output pixel covered by no tile".into(),
        });
    }
    Ok(ProofReport {
        tiles: plan.tiles.len(),
        latent_pixels: plan.latent_h * plan.latent_w,
        max_step: plan.tile_latent * plan.rho,
        step_bound: plan.tile_latent * plan.rho,
    })
}
