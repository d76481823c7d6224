//! Residual building blocks, the four transforms of the codec, and their
//! parameters.
//!
//! Three block shapes cover every layer of the network:
//!
//! * EDRB: `conv(2,2) -> act -> conv(1,1)` with a `conv(2,2)` skip. Its
//!   footprint equals its stride, so a stack of them needs no overlap.
//! * EURB: the up-sampling mirror, `tconv(2,2) -> act -> conv(1,1)` with a
//!   `tconv(2,2)` skip.
//! * BRB: `conv(3,1) -> act -> tconv(3,1)` with a `conv(1,1)` skip. Size
//!   preserving, widens the receptive field by `4 * rho`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::calculus::{
    self, chain_sizes, Footprint, LayerKind, LayerSpec, SpatialMap, StackSummary,
};
use crate::error::{Error, Result};
use crate::tensor::{self, Dims, Tensor};

/// Channel count used when none is given.
pub const DEFAULT_CHANNELS: usize = 192;

/// Image channels (RGB).
pub const IMAGE_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Edrb,
    Eurb,
    Brb,
    StemConv,
    StemTconv,
    Pointwise,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Edrb => "EDRB",
            BlockKind::Eurb => "EURB",
            BlockKind::Brb => "BRB",
            BlockKind::StemConv => "StemConv",
            BlockKind::StemTconv => "StemTconv",
            BlockKind::Pointwise => "Pointwise",
        }
    }
}

/// A layer with its channel mapping. `Pointwise` layers are activations
/// and carry no parameters; a 1x1 convolution is `conv(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layer {
    pub spec: LayerSpec,
    pub c_in: usize,
    pub c_out: usize,
}

impl Layer {
    fn conv(k: usize, s: usize, c_in: usize, c_out: usize) -> Self {
        Layer {
            spec: LayerSpec::conv(k, s),
            c_in,
            c_out,
        }
    }

    fn tconv(k: usize, s: usize, c_in: usize, c_out: usize) -> Self {
        Layer {
            spec: LayerSpec::tconv(k, s),
            c_in,
            c_out,
        }
    }

    fn act(c: usize) -> Self {
        Layer {
            spec: LayerSpec::pointwise(),
            c_in: c,
            c_out: c,
        }
    }

    pub fn has_params(&self) -> bool {
        self.spec.kind != LayerKind::Pointwise
    }

    /// Weight tensor shape: `(c_out, c_in, k, k)` for convolutions,
    /// `(c_in, c_out, k, k)` for transposed convolutions.
    pub fn weight_dims(&self) -> Dims {
        let k = self.spec.k;
        match self.spec.kind {
            LayerKind::Tconv => Dims::new(self.c_in, self.c_out, k, k),
            _ => Dims::new(self.c_out, self.c_in, k, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockSpec {
    /// Parameter-name prefix, e.g. `g_a.3`.
    pub name: String,
    pub kind: BlockKind,
    pub c_in: usize,
    pub c_out: usize,
    pub main_path: Vec<Layer>,
    /// Empty for non-residual blocks.
    pub skip_path: Vec<Layer>,
}

impl BlockSpec {
    pub fn new(name: impl Into<String>, kind: BlockKind, c_in: usize, c_out: usize) -> Self {
        let (main_path, skip_path) = match kind {
            BlockKind::Edrb => (
                vec![
                    Layer::conv(2, 2, c_in, c_out),
                    Layer::act(c_out),
                    Layer::conv(1, 1, c_out, c_out),
                ],
                vec![Layer::conv(2, 2, c_in, c_out)],
            ),
            BlockKind::Eurb => (
                vec![
                    Layer::tconv(2, 2, c_in, c_out),
                    Layer::act(c_out),
                    Layer::conv(1, 1, c_out, c_out),
                ],
                vec![Layer::tconv(2, 2, c_in, c_out)],
            ),
            BlockKind::Brb => (
                vec![
                    Layer::conv(3, 1, c_in, c_out),
                    Layer::act(c_out),
                    Layer::tconv(3, 1, c_out, c_out),
                ],
                vec![Layer::conv(1, 1, c_in, c_out)],
            ),
            BlockKind::StemConv => (vec![Layer::conv(2, 2, c_in, c_out)], vec![]),
            BlockKind::StemTconv => (vec![Layer::tconv(2, 2, c_in, c_out)], vec![]),
            BlockKind::Pointwise => (vec![Layer::act(c_in)], vec![]),
        };
        BlockSpec {
            name: name.into(),
            kind,
            c_in,
            c_out,
            main_path,
            skip_path,
        }
    }

    pub fn is_residual(&self) -> bool {
        !self.skip_path.is_empty()
    }

    fn main_specs(&self) -> Vec<LayerSpec> {
        self.main_path.iter().map(|l| l.spec).collect()
    }

    fn skip_specs(&self) -> Vec<LayerSpec> {
        self.skip_path.iter().map(|l| l.spec).collect()
    }

    /// Parameter names and shapes of every weighted layer, in path order.
    pub fn params(&self) -> Vec<(String, Layer)> {
        let mut out = Vec::new();
        for (path, layers) in [("main", &self.main_path), ("skip", &self.skip_path)] {
            for (j, layer) in layers.iter().enumerate() {
                if layer.has_params() {
                    out.push((format!("{}.{path}.{j}", self.name), *layer));
                }
            }
        }
        out
    }

    fn label(&self) -> String {
        format!("block {} ({})", self.name, self.kind.name())
    }
}

impl SpatialMap for BlockSpec {
    fn output_size(&self, w_in: usize) -> Result<usize> {
        let relabel = |e: Error| match e {
            Error::Sizing { layer, detail } => {
                Error::sizing(self.label(), format!("{layer}: {detail}"))
            }
            other => other,
        };
        let main = calculus::out_size(&self.main_specs(), w_in).map_err(relabel)?;
        if self.is_residual() {
            let skip = calculus::out_size(&self.skip_specs(), w_in).map_err(relabel)?;
            if skip != main {
                return Err(Error::sizing(
                    self.label(),
                    format!("main path gives {main} but skip path gives {skip} for input {w_in}"),
                ));
            }
        }
        Ok(main)
    }

    fn input_interval(&self, w_in: usize, out: Footprint) -> Footprint {
        let through = |specs: &[LayerSpec]| {
            let sizes = chain_sizes(specs, w_in).expect("sizes checked by output_size");
            specs
                .iter()
                .zip(&sizes)
                .rev()
                .fold(out, |iv, (layer, &w)| layer.input_interval(w, iv))
        };
        let main = through(&self.main_specs());
        if self.is_residual() {
            main.union(through(&self.skip_specs()))
        } else {
            main
        }
    }
}

/// Stages of an analysis transform; the synthesis transform mirrors them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Stem,
    Brb,
    Edrb,
}

/// Encoder layout reproducing r = 72, rho = 16, o = 64.
pub const PAPER_STAGES: [Stage; 7] = [
    Stage::Stem,
    Stage::Brb,
    Stage::Edrb,
    Stage::Brb,
    Stage::Edrb,
    Stage::Brb,
    Stage::Edrb,
];

/// Down-sampling only; r = rho so no overlap is needed.
pub const EDRB_ONLY_STAGES: [Stage; 4] = [Stage::Stem, Stage::Edrb, Stage::Edrb, Stage::Edrb];

/// The four transforms: analysis `g_a`, synthesis `g_s`, hyper-analysis
/// `h_a` and hyper-synthesis `h_s` (which emits means then scales).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub name: String,
    pub version: u16,
    pub channels: usize,
    pub g_a: Vec<BlockSpec>,
    pub g_s: Vec<BlockSpec>,
    pub h_a: Vec<BlockSpec>,
    pub h_s: Vec<BlockSpec>,
}

/// The default network: 3 EDRB/EURB pairs and 6 BRBs.
pub fn build_paper_network(channels: usize) -> NetworkSpec {
    NetworkSpec::from_stages("cps-paper", channels, &PAPER_STAGES)
}

/// Stem plus three EDRBs, mirrored.
pub fn build_edrb_network(channels: usize) -> NetworkSpec {
    NetworkSpec::from_stages("cps-edrb-only", channels, &EDRB_ONLY_STAGES)
}

impl NetworkSpec {
    pub fn from_stages(name: &str, channels: usize, stages: &[Stage]) -> Self {
        assert!(channels >= 1, "channels must be >= 1");
        let c = channels;
        let g_a = stages
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let id = format!("g_a.{i}");
                match st {
                    Stage::Stem => BlockSpec::new(id, BlockKind::StemConv, IMAGE_CHANNELS, c),
                    Stage::Brb => BlockSpec::new(id, BlockKind::Brb, c, c),
                    Stage::Edrb => BlockSpec::new(id, BlockKind::Edrb, c, c),
                }
            })
            .collect();
        let g_s = stages
            .iter()
            .rev()
            .enumerate()
            .map(|(i, st)| {
                let id = format!("g_s.{i}");
                match st {
                    Stage::Stem => BlockSpec::new(id, BlockKind::StemTconv, c, IMAGE_CHANNELS),
                    Stage::Brb => BlockSpec::new(id, BlockKind::Brb, c, c),
                    Stage::Edrb => BlockSpec::new(id, BlockKind::Eurb, c, c),
                }
            })
            .collect();
        let h_a = vec![
            BlockSpec::new("h_a.0", BlockKind::StemConv, c, c),
            BlockSpec::new("h_a.1", BlockKind::Pointwise, c, c),
            BlockSpec::new("h_a.2", BlockKind::StemConv, c, c),
        ];
        let h_s = vec![
            BlockSpec::new("h_s.0", BlockKind::StemTconv, c, c),
            BlockSpec::new("h_s.1", BlockKind::Pointwise, c, c),
            BlockSpec::new("h_s.2", BlockKind::StemTconv, c, 2 * c),
        ];
        NetworkSpec {
            name: name.to_string(),
            version: 1,
            channels,
            g_a,
            g_s,
            h_a,
            h_s,
        }
    }

    /// Main-path layers of the analysis transform, flattened. Skip paths
    /// never reach further than their main path, so this chain carries the
    /// encoder's receptive field.
    pub fn encoder_layers(&self) -> Vec<LayerSpec> {
        self.g_a
            .iter()
            .flat_map(|b| b.main_path.iter().map(|l| l.spec))
            .collect()
    }

    pub fn r_enc(&self) -> usize {
        calculus::receptive_field(&self.encoder_layers()).expect("encoder has no strided tconv")
    }

    pub fn rho_enc(&self) -> usize {
        calculus::scale_factor(&self.encoder_layers())
    }

    pub fn summary(&self, patch: Option<usize>) -> Result<StackSummary> {
        calculus::summarize(&self.encoder_layers(), patch)
    }

    fn transforms(&self) -> [&[BlockSpec]; 4] {
        [&self.g_a, &self.g_s, &self.h_a, &self.h_s]
    }

    /// Canonical text form; the spec hash is taken over it.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "{} v{} channels={}\n",
            self.name, self.version, self.channels
        );
        for blocks in self.transforms() {
            for b in blocks {
                let _ = write!(
                    s,
                    "{} {} {}->{} main=[",
                    b.name,
                    b.kind.name(),
                    b.c_in,
                    b.c_out
                );
                for l in &b.main_path {
                    let _ = write!(s, "{} ", l.spec);
                }
                s.push_str("] skip=[");
                for l in &b.skip_path {
                    let _ = write!(s, "{} ", l.spec);
                }
                s.push_str("]\n");
            }
        }
        s
    }

    pub fn spec_hash(&self) -> u64 {
        hash64(self.describe().as_bytes())
    }
}

pub(crate) fn hash64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// A named parameter. Biases and scales are rank 1, kernels rank 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub rank: u8,
    pub tensor: Tensor,
}

impl Param {
    pub fn shape(&self) -> Vec<usize> {
        let d = self.tensor.dims();
        let all = [d.n, d.c, d.h, d.w];
        all[4 - self.rank as usize..].to_vec()
    }

    fn vector(values: Vec<f32>) -> Param {
        let n = values.len();
        Param {
            rank: 1,
            tensor: Tensor::from_vec(Dims::new(1, 1, 1, n), values).expect("non-empty vector"),
        }
    }
}

/// Name of the per-channel scale vector of the factorized hyper-latent model.
pub const Z_SCALE: &str = "hyper.z_scale";

/// Ordered named parameters plus the metadata they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    pub seed: u64,
    pub channels: usize,
    pub spec_hash: u64,
    entries: Vec<(String, Param)>,
    index: HashMap<String, usize>,
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Fills every kernel with Xavier-uniform values from one SplitMix64 stream
/// (parameters in network order), zero biases, and hyper-latent scales
/// uniform on `[1, 4)`.
pub fn init_weights(spec: &NetworkSpec, seed: u64) -> WeightStore {
    let mut rng = SplitMix64::new(seed);
    let mut store = WeightStore::empty(spec, seed);
    for blocks in spec.transforms() {
        for block in blocks {
            for (name, layer) in block.params() {
                let k2 = layer.spec.k * layer.spec.k;
                let bound = (6.0 / ((layer.c_in + layer.c_out) * k2) as f64).sqrt();
                let dims = layer.weight_dims();
                let values = (0..dims.len())
                    .map(|_| ((2.0 * rng.next_f64() - 1.0) * bound) as f32)
                    .collect();
                let weight = Param {
                    rank: 4,
                    tensor: Tensor::from_vec(dims, values).expect("weight dims"),
                };
                store.insert(format!("{name}.weight"), weight);
                store.insert(
                    format!("{name}.bias"),
                    Param::vector(vec![0.0; layer.c_out]),
                );
            }
        }
    }
    let scales = (0..spec.channels)
        .map(|_| (1.0 + 3.0 * rng.next_f64()) as f32)
        .collect();
    store.insert(Z_SCALE.to_string(), Param::vector(scales));
    store
}

const WEIGHT_MAGIC: &[u8; 4] = b"CPSW";
const WEIGHT_VERSION: u16 = 1;

impl WeightStore {
    fn empty(spec: &NetworkSpec, seed: u64) -> Self {
        WeightStore {
            seed,
            channels: spec.channels,
            spec_hash: spec.spec_hash(),
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, name: String, param: Param) {
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, param));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].1)
            .ok_or_else(|| Error::Format(format!("missing parameter {name}")))
    }

    pub fn z_scales(&self) -> Result<&[f32]> {
        Ok(self.get(Z_SCALE)?.tensor.data())
    }

    /// Serializes to the `CPSW` format (little endian).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.spec_hash.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, p) in &self.entries {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(p.rank);
            for d in p.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in p.tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a `CPSW` image and checks it against `spec`: hash, names and
    /// shapes must all match.
    pub fn from_bytes(bytes: &[u8], spec: &NetworkSpec) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != WEIGHT_MAGIC {
            return Err(Error::Format("bad weight-file magic".into()));
        }
        let version = r.u16()?;
        if version != WEIGHT_VERSION {
            return Err(Error::Format(format!(
                "unsupported weight-file version {version}"
            )));
        }
        let spec_hash = r.u64()?;
        if spec_hash != spec.spec_hash() {
            return Err(Error::Format(format!(
                "weight file was built for spec {spec_hash:016x}, expected {:016x}",
                spec.spec_hash()
            )));
        }
        let seed = r.u64()?;
        let count = r.u32()? as usize;
        let mut store = WeightStore::empty(spec, seed);
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?
                .to_string();
            let rank = r.u8()?;
            if !(1..=4).contains(&rank) {
                return Err(Error::Format(format!("{name}: rank {rank} not in 1..=4")));
            }
            let mut shape = [1usize; 4];
            for slot in shape[4 - rank as usize..].iter_mut() {
                *slot = r.u32()? as usize;
            }
            let dims = Dims::new(shape[0], shape[1], shape[2], shape[3]);
            let raw = r.take(dims.len() * 4)?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            let tensor = Tensor::from_vec(dims, values)
                .map_err(|e| Error::Format(format!("{name}: {e}")))?;
            store.insert(name, Param { rank, tensor });
        }
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }
        store.validate(spec)?;
        Ok(store)
    }

    /// Every weighted layer has exactly one kernel and bias of matching
    /// shape, and nothing else is present besides the hyper-latent scales.
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if self.spec_hash != spec.spec_hash() {
            return Err(Error::Format(
                "weight store belongs to a different network".into(),
            ));
        }
        let mut expected = 1;
        for blocks in spec.transforms() {
            for block in blocks {
                for (name, layer) in block.params() {
                    let w = self.get(&format!("{name}.weight"))?;
                    if w.rank != 4 || w.tensor.dims() != layer.weight_dims() {
                        return Err(Error::Format(format!(
                            "{name}.weight has shape {:?}, expected {}",
                            w.shape(),
                            layer.weight_dims()
                        )));
                    }
                    let b = self.get(&format!("{name}.bias"))?;
                    if b.shape() != [layer.c_out] {
                        return Err(Error::Format(format!(
                            "{name}.bias has shape {:?}",
                            b.shape()
                        )));
                    }
                    expected += 2;
                }
            }
        }
        if self.get(Z_SCALE)?.shape() != [spec.channels] {
            return Err(Error::Format(format!(
                "{Z_SCALE} must have {} entries",
                spec.channels
            )));
        }
        if self.entries.len() != expected {
            return Err(Error::Format(format!(
                "{} parameters present, {expected} expected",
                self.entries.len()
            )));
        }
        Ok(())
    }

    /// Hash of the serialized store; bitstreams record it.
    pub fn hash(&self) -> u64 {
        hash64(&self.to_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, spec: &NetworkSpec) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, spec)
    }

    /// Loads `path` if it exists, otherwise initializes from `seed` and
    /// writes the file.
    pub fn load_or_init(path: impl AsRef<Path>, spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() {
            Self::load(path, spec)
        } else {
            let store = init_weights(spec, seed);
            store.save(path)?;
            Ok(store)
        }
    }
}

/// Little-endian cursor that reports truncation as a format error.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated: needed {n} bytes at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2")))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4")))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8")))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn run_layer(layer: &Layer, prefix: &str, weights: &WeightStore, x: &Tensor) -> Result<Tensor> {
    match layer.spec.kind {
        LayerKind::Pointwise => Ok(tensor::activation(x)),
        kind => {
            let w = &weights.get(&format!("{prefix}.weight"))?.tensor;
            let b = weights.get(&format!("{prefix}.bias"))?.tensor.data();
            if kind == LayerKind::Conv {
                tensor::conv2d(x, w, b, layer.spec.s)
            } else {
                tensor::tconv2d(x, w, b, layer.spec.s)
            }
        }
    }
}

fn run_path(
    block: &BlockSpec,
    path: &str,
    layers: &[Layer],
    weights: &WeightStore,
    x: &Tensor,
) -> Result<Tensor> {
    let mut cur: Option<Tensor> = None;
    for (j, layer) in layers.iter().enumerate() {
        let input = cur.as_ref().unwrap_or(x);
        let next = run_layer(layer, &format!("{}.{path}.{j}", block.name), weights, input)?;
        cur = Some(next);
    }
    Ok(cur.unwrap_or_else(|| x.clone()))
}

/// Evaluates one block: `main(x) + skip(x)` for residual blocks.
pub fn forward_block(block: &BlockSpec, weights: &WeightStore, x: &Tensor) -> Result<Tensor> {
    let relabel = |e: Error| match e {
        Error::Sizing { layer, detail } => {
            Error::sizing(block.label(), format!("{layer}: {detail}"))
        }
        Error::Contract(detail) => Error::sizing(block.label(), detail),
        other => other,
    };
    let main = run_path(block, "main", &block.main_path, weights, x).map_err(relabel)?;
    if !block.is_residual() {
        return Ok(main);
    }
    let skip = run_path(block, "skip", &block.skip_path, weights, x).map_err(relabel)?;
    if main.dims() != skip.dims() {
        return Err(Error::sizing(
            block.label(),
            format!(
                "main path output {} differs from skip path output {}; w_in - k must be divisible by s",
                main.dims(),
                skip.dims()
            ),
        ));
    }
    tensor::add(&main, &skip).map_err(relabel)
}

/// Runs `blocks` in order.
pub fn forward(blocks: &[BlockSpec], weights: &WeightStore, x: &Tensor) -> Result<Tensor> {
    let mut cur: Option<Tensor> = None;
    for block in blocks {
        let next = forward_block(block, weights, cur.as_ref().unwrap_or(x))?;
        cur = Some(next);
    }
    Ok(cur.unwrap_or_else(|| x.clone()))
}
