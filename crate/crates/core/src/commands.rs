//! The `cps` command line: argument types and command implementations.
//! Commands write their report to the supplied writer; the binary only
//! parses arguments and maps errors to exit codes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::blocks::{
    build_edrb_network, build_paper_network, init_weights, NetworkSpec, WeightStore,
    DEFAULT_CHANNELS,
};
use crate::codec::{self, Bitstream, EncodeOptions};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{self, Boundaries, MetricReport};
use crate::pops;

#[derive(Debug, Parser)]
#[command(
    name = "cps",
    version,
    about = "Block-wise neural image codec with seamless patch stitching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the network's tiling constants and the tile grid for an image
    Plan(PlanArgs),
    /// Compress a PPM image into a CPS1 bitstream
    Encode(EncodeArgs),
    /// Reconstruct a PPM image from a CPS1 bitstream
    Decode(DecodeArgs),
    /// Check that tiled and whole-image paths agree bit for bit
    Verify(VerifyArgs),
    /// Measure analysis-stage memory of both paths across resolutions
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Net {
    /// Stem, three EDRB/EURB pairs and six BRBs
    Paper,
    /// Stem and three EDRBs; needs no overlap
    EdrbOnly,
}

impl Net {
    pub fn build(self, channels: usize) -> NetworkSpec {
        match self {
            Net::Paper => build_paper_network(channels),
            Net::EdrbOnly => build_edrb_network(channels),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryMode {
    /// Seams of the encoder tile plan
    Tiles,
    /// Fixed 8-pixel grid
    Grid8,
    /// No boundaries; PSNR-B equals PSNR
    None,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Net::Paper)]
    pub net: Net,
    #[arg(long, default_value_t = DEFAULT_CHANNELS)]
    pub channels: usize,
    /// Seed of the weight initializer
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight file; created from (net, channels, seed) if missing
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

impl ModelArgs {
    pub fn load(&self) -> Result<(NetworkSpec, WeightStore)> {
        if self.channels == 0 {
            return Err(Error::Contract("channels must be at least 1".into()));
        }
        let net = self.net.build(self.channels);
        let weights = match &self.weights {
            Some(path) => WeightStore::load_or_init(path, &net, self.seed)?,
            None => init_weights(&net, self.seed),
        };
        Ok((net, weights))
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long, value_enum, default_value_t = Net::Paper)]
    pub net: Net,
    /// Take the dimensions from this PPM image
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    pub height: Option<usize>,
    #[arg(long, required_unless_present = "input")]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub patch_size: usize,
    /// Round the dimensions up to a multiple of rho
    #[arg(long)]
    pub pad: bool,
    /// Write the serialized tile plan here
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub patch_size: usize,
    /// Edge-replicate the image to a multiple of rho
    #[arg(long)]
    pub pad: bool,
    /// Worker threads; 0 picks the number of cores. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Analyse the whole image at once instead of tiling
    #[arg(long)]
    pub full: bool,
    /// Rate-distortion tag copied into the report
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = BoundaryMode::Tiles)]
    pub boundary_mode: BoundaryMode,
    /// Also write the report here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Run the synthesis transform on the whole latent plane
    #[arg(long)]
    pub full: bool,
    /// Original image, for distortion metrics
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BoundaryMode::Tiles)]
    pub boundary_mode: BoundaryMode,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// PPM image; a synthetic one is generated when absent
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Seed of the synthetic image
    #[arg(long, default_value_t = 0)]
    pub image_seed: u64,
    #[arg(long, default_value_t = 128)]
    pub patch_size: usize,
    #[arg(long)]
    pub pad: bool,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Overlap reduction for the tightness probe (default rho, 0 skips it)
    #[arg(long)]
    pub overlap_deficit: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Net::Paper)]
    pub net: Net,
    /// Latent channels; kept small so large images fit the budget
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub patch_size: usize,
    /// Comma-separated sizes, `N` for NxN or `WxH`
    #[arg(long, default_value = "256,512,1024,2048", value_parser = parse_resolutions)]
    pub resolutions: Resolutions,
    /// Skip sizes whose estimated whole-image peak exceeds this many MiB
    #[arg(long, default_value_t = 4096)]
    pub budget_mib: usize,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolutions(pub Vec<(usize, usize)>);

pub fn parse_resolutions(s: &str) -> std::result::Result<Resolutions, String> {
    let one = |t: &str| -> std::result::Result<(usize, usize), String> {
        let bad = || format!("bad resolution {t:?}");
        match t.split_once('x') {
            Some((w, h)) => Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?)),
            None => {
                let n = t.parse().map_err(|_| bad())?;
                Ok((n, n))
            }
        }
    };
    let v = s
        .split(',')
        .map(|t| one(t.trim()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.is_empty() || v.iter().any(|&(w, h)| w == 0 || h == 0) {
        return Err(format!("bad resolution list {s:?}"));
    }
    Ok(Resolutions(v))
}

/// Key-value report, one `key: value` per line.
#[derive(Debug, Default)]
struct Report(String);

impl Report {
    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key}: {value}");
    }

    fn metrics(&mut self, m: &MetricReport) {
        let _ = writeln!(self.0, "{m}");
    }

    fn emit(&self, out: &mut dyn Write, path: Option<&PathBuf>) -> Result<()> {
        out.write_all(self.0.as_bytes())?;
        if let Some(p) = path {
            std::fs::write(p, &self.0)?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Plan(a) => plan(&a, out),
        Command::Encode(a) => encode(&a, out),
        Command::Decode(a) => decode(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Bench(a) => bench(&a, out),
    }
}

pub fn plan(a: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let net = a.net.build(DEFAULT_CHANNELS);
    let (mut w, mut h) = match &a.input {
        Some(p) => {
            let img = Image::load(p)?;
            (img.width(), img.height())
        }
        None => (a.width.unwrap_or(0), a.height.unwrap_or(0)),
    };
    let s = net.summary(Some(a.patch_size))?;
    if a.pad {
        w = w.div_ceil(s.rho) * s.rho;
        h = h.div_ceil(s.rho) * s.rho;
    }
    let plan = pops::plan_encode(h, w, a.patch_size, &net)?;
    let proof = pops::verify_plan(&plan)?;
    writeln!(
        out,
        "r={} rho={} o={} step={} tiles={}x{}",
        s.r, s.rho, s.o, plan.step, plan.rows, plan.cols
    )?;
    writeln!(out, "two_e={}", s.two_e)?;
    writeln!(out, "latent={}x{}", plan.latent_h, plan.latent_w)?;
    writeln!(out, "{proof}")?;
    if let Some(p) = &a.output {
        std::fs::write(p, plan.to_string())?;
    }
    Ok(())
}

fn boundaries(
    mode: BoundaryMode,
    plan: Option<&pops::TilePlan>,
    width: usize,
    height: usize,
) -> Boundaries {
    match (mode, plan) {
        (BoundaryMode::Tiles, Some(p)) => {
            let mut b = Boundaries::from_plan(p);
            b.rows.retain(|&r| r < height);
            b.cols.retain(|&c| c < width);
            b
        }
        (BoundaryMode::Tiles, None) | (BoundaryMode::None, _) => Boundaries::none(),
        (BoundaryMode::Grid8, _) => Boundaries::grid(width, height, 8),
    }
}

/// Tile plan the encoder would use for a decoded stream's header.
fn header_plan(h: &codec::Header, net: &NetworkSpec) -> Option<pops::TilePlan> {
    pops::plan_encode(h.padded_height(), h.padded_width(), h.patch as usize, net).ok()
}

pub fn encode(a: &EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let (net, weights) = a.model.load()?;
    let image = Image::load(&a.input)?;
    let opts = EncodeOptions {
        patch: a.patch_size,
        pad: a.pad,
        threads: a.threads,
    };
    let enc = if a.full {
        codec::encode_full(&image, &net, &weights, &opts)?
    } else {
        codec::encode_tiled(&image, &net, &weights, &opts)?
    };
    let bytes = enc.bitstream.to_bytes();
    std::fs::write(&a.output, &bytes)?;
    let dec = codec::decode_tiled(&enc.bitstream, &net, &weights, a.threads)?;
    let plan = header_plan(&enc.bitstream.header, &net);
    let bounds = boundaries(
        a.boundary_mode,
        plan.as_ref(),
        image.width(),
        image.height(),
    );
    let m = MetricReport::measure(&image, &dec.image, &bounds, bytes.len())?;

    let mut r = Report::default();
    r.put("command", "encode");
    r.put("path", if a.full { "full" } else { "tiled" });
    r.put("width", image.width());
    r.put("height", image.height());
    r.put("patch", a.patch_size);
    r.put("tiles", enc.stats.tiles);
    r.put("bytes", bytes.len());
    r.put("bytes_z", enc.rate.bytes_z);
    r.put("bytes_y", enc.rate.bytes_y);
    r.put("bits_z_estimate", format!("{:.1}", enc.rate.bits_z));
    r.put("bits_y_estimate", format!("{:.1}", enc.rate.bits_y));
    r.put("saturated", enc.y.saturated.len() + enc.z.saturated.len());
    if let Some(l) = a.lambda {
        r.put("lambda", l);
    }
    r.metrics(&m);
    r.put("reconstruction_sha256", dec.image.digest());
    r.emit(out, a.report.as_ref())
}

pub fn decode(a: &DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let (net, weights) = a.model.load()?;
    let bs = Bitstream::from_bytes(&std::fs::read(&a.input)?)?;
    let dec = if a.full {
        codec::decode_full(&bs, &net, &weights, a.threads)?
    } else {
        codec::decode_tiled(&bs, &net, &weights, a.threads)?
    };
    dec.image.save(&a.output)?;

    let mut r = Report::default();
    r.put("command", "decode");
    r.put("path", if a.full { "full" } else { "tiled" });
    r.put("width", dec.image.width());
    r.put("height", dec.image.height());
    r.put("bytes", bs.len());
    match &a.reference {
        Some(p) => {
            let reference = Image::load(p)?;
            let plan = header_plan(&bs.header, &net);
            let bounds = boundaries(
                a.boundary_mode,
                plan.as_ref(),
                dec.image.width(),
                dec.image.height(),
            );
            r.metrics(&MetricReport::measure(
                &reference,
                &dec.image,
                &bounds,
                bs.len(),
            )?);
        }
        None => {
            r.put("bpp", format!("{:.6}", dec.bpp));
            r.put("psnr", "n/a (no reference)");
        }
    }
    r.put("reconstruction_sha256", dec.image.digest());
    r.emit(out, None)
}

/// Runs one named check, printing its verdict. Returns the failure, if any.
fn check(
    out: &mut dyn Write,
    name: &str,
    outcome: std::result::Result<String, String>,
) -> Result<Option<Error>> {
    match outcome {
        Ok(detail) => {
            writeln!(out, "PASS {name}: {detail}")?;
            Ok(None)
        }
        Err(detail) => {
            writeln!(out, "FAIL {name}: {detail}")?;
            Ok(Some(Error::Mismatch {
                check: name.to_string(),
                detail,
            }))
        }
    }
}

fn first_byte_difference(a: &[u8], b: &[u8]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn first_pixel_difference(a: &Image, b: &Image) -> Option<(usize, usize)> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Some((0, 0));
    }
    a.data()
        .iter()
        .zip(b.data())
        .position(|(x, y)| x != y)
        .map(|i| (i / 3 / a.width(), i / 3 % a.width()))
}

pub fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let (net, weights) = a.model.load()?;
    let image = match &a.input {
        Some(p) => Image::load(p)?,
        None => Image::synthetic(a.width, a.height, a.image_seed)?,
    };
    let opts = EncodeOptions {
        patch: a.patch_size,
        pad: a.pad,
        threads: a.threads,
    };
    let plan = codec::encode_plan(&image, &net, &opts)?;
    let mut failures = Vec::new();

    let proof = pops::verify_plan(&plan)
        .map(|p| p.to_string())
        .map_err(|e| e.to_string());
    failures.extend(check(out, "plan", proof)?);

    let tiled = codec::encode_tiled(&image, &net, &weights, &opts)?;
    let full = codec::encode_full(&image, &net, &weights, &opts)?;
    let latent = match tiled.latent.first_difference(&full.latent) {
        None => Ok(format!(
            "{} latents identical over {} tiles",
            tiled.latent.dims().len(),
            plan.tiles.len()
        )),
        Some((_, c, y, x)) => Err(format!("first difference at channel {c}, row {y}, col {x}")),
    };
    failures.extend(check(out, "latent", latent)?);

    let (bt, bf) = (tiled.bitstream.to_bytes(), full.bitstream.to_bytes());
    let stream = match first_byte_difference(&bt, &bf) {
        None => Ok(format!("{} bytes identical", bt.len())),
        Some(i) => Err(format!("first difference at byte {i}")),
    };
    failures.extend(check(out, "bitstream", stream)?);

    let dt = codec::decode_tiled(&Bitstream::from_bytes(&bt)?, &net, &weights, a.threads)?;
    let df = codec::decode_full(&Bitstream::from_bytes(&bf)?, &net, &weights, a.threads)?;
    let symbols = if dt.y == tiled.y && dt.z == tiled.z {
        Ok(format!("{} + {} symbols recovered", dt.y.len(), dt.z.len()))
    } else {
        Err("decoded symbols differ from the encoded ones".to_string())
    };
    failures.extend(check(out, "symbols", symbols)?);

    let recon = match first_pixel_difference(&dt.image, &df.image) {
        None => Ok(format!("sha256 {}", dt.image.digest())),
        Some((y, x)) => Err(format!("first difference at row {y}, col {x}")),
    };
    failures.extend(check(out, "reconstruction", recon)?);

    let bounds = boundaries(
        BoundaryMode::Tiles,
        Some(&plan),
        image.width(),
        image.height(),
    );
    let (pt, pf) = (
        metrics::psnr_b(&image, &dt.image, &bounds)?,
        metrics::psnr_b(&image, &df.image, &bounds)?,
    );
    let pb = if pt.to_bits() == pf.to_bits() {
        Ok(format!("{pt:.4} dB on both paths"))
    } else {
        Err(format!("tiled {pt} dB, full {pf} dB"))
    };
    failures.extend(check(out, "psnr_b", pb)?);

    let deficit = a.overlap_deficit.unwrap_or(plan.rho);
    if deficit == 0 {
        writeln!(out, "SKIP tightness: no overlap deficit requested")?;
    } else if plan.tiles.len() == 1 {
        writeln!(out, "SKIP tightness: single tile, no seams to probe")?;
    } else {
        let probe = codec::encode_tiled_with_deficit(&image, &net, &weights, &opts, deficit)?;
        match probe.latent.first_difference(&full.latent) {
            Some((_, c, y, x)) => writeln!(
                out,
                "EXPECTED-MISMATCH tightness: overlap {} - {deficit} differs at channel {c}, row {y}, col {x}",
                plan.overlap
            )?,
            None => writeln!(
                out,
                "NOTE tightness: overlap {} - {deficit} produced no mismatch on this input",
                plan.overlap
            )?,
        }
    }

    match failures.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub const BENCH_HEADER: &str =
    "width,height,pixels,peak_bytes_tiled,peak_bytes_full,wall_ms_tiled,wall_ms_full";

/// Rough whole-image analysis peak: the float image plus three
/// half-resolution feature planes.
fn estimate_full_bytes(w: usize, h: usize, channels: usize) -> usize {
    4 * w * h * (3 + 3 * channels / 4)
}

pub fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let net = a.net.build(a.channels);
    let weights = init_weights(&net, a.seed);
    let opts = EncodeOptions {
        patch: a.patch_size,
        pad: true,
        threads: 1,
    };
    let mut csv = format!("{BENCH_HEADER}\n");
    for &(w, h) in &a.resolutions.0 {
        let est = estimate_full_bytes(w, h, a.channels);
        if est > a.budget_mib << 20 {
            eprintln!(
                "note: skipping {w}x{h}, estimated {} MiB exceeds the {} MiB budget",
                est >> 20,
                a.budget_mib
            );
            continue;
        }
        let image = Image::synthetic(w, h, a.seed)?;
        let plan = codec::encode_plan(&image, &net, &opts)?;
        let padded = if opts.pad {
            image.pad_replicate(plan.width, plan.height)?
        } else {
            image
        };
        let (_, t) = codec::analyze_tiled(&padded, &plan, &net, &weights, 1)?;
        let (_, f) = codec::analyze_full(&padded, &net, &weights, 1)?;
        let _ = writeln!(
            csv,
            "{w},{h},{},{},{},{},{}",
            w * h,
            t.image_peak_bytes,
            f.image_peak_bytes,
            t.wall_ms,
            f.wall_ms
        );
    }
    match &a.output {
        Some(p) => std::fs::write(p, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<()>, String) {
        let cli = Cli::try_parse_from(std::iter::once("cps").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let res = run(cli, &mut out);
        (res, String::from_utf8(out).unwrap())
    }

    #[test]
    fn plan_defaults() {
        let (res, out) = run_args(&["plan", "--height", "512", "--width", "768"]);
        res.unwrap();
        assert!(
            out.starts_with("r=72 rho=16 o=64 step=64 tiles=7x11\n"),
            "{out}"
        );
    }

    #[test]
    fn plan_edrb_only() {
        let (res, out) = run_args(&[
            "plan",
            "--net",
            "edrb-only",
            "--height",
            "256",
            "--width",
            "256",
        ]);
        res.unwrap();
        assert!(out.contains(" o=0 "), "{out}");
    }

    #[test]
    fn plan_indivisible_needs_pad() {
        let (res, _) = run_args(&["plan", "--height", "500", "--width", "768"]);
        let err = res.unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("multiple of rho"), "{err}");
        let (res, out) = run_args(&["plan", "--height", "500", "--width", "768", "--pad"]);
        res.unwrap();
        assert!(out.contains("latent=32x48"));
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!(
            parse_resolutions("256, 640x360").unwrap().0,
            [(256, 256), (640, 360)]
        );
        assert!(parse_resolutions("0").is_err());
        assert!(parse_resolutions("12y4").is_err());
    }
}
