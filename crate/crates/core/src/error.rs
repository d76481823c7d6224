use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes that can never be combined (channel count, rank, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A padding-free layer received an input smaller than its kernel, or
    /// residual branches disagree in size.
    #[error("sizing error at {layer}: {detail}")]
    Sizing { layer: String, detail: String },

    #[error("unsupported layer {index} ({kind}): {hint}")]
    UnsupportedLayer {
        index: usize,
        kind: &'static str,
        hint: &'static str,
    },

    #[error("patch size {patch} is smaller than the receptive field {receptive_field}")]
    PatchTooSmall {
        patch: usize,
        receptive_field: usize,
    },

    #[error("index {index} out of range (size {size})")]
    Index { index: usize, size: usize },

    #[error("window {top},{left} {height}x{width} lies outside a {h}x{w} plane")]
    OutOfBounds {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
        h: usize,
        w: usize,
    },

    #[error("coverage error at ({row}, {col}): {detail}")]
    Coverage {
        row: usize,
        col: usize,
        detail: String,
    },

    /// A tile plan fails its coverage or step-bound proof at this pixel.
    #[error("plan violation at ({row}, {col}): {detail}")]
    PlanViolation {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("planning error: {constraint}")]
    Plan { constraint: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("weight-store hash mismatch: stream expects {expected:016x}, loaded weights are {actual:016x}")]
    HashMismatch { expected: u64, actual: u64 },

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("corrupt range-coded stream: {0}")]
    Corrupt(String),

    /// Two paths that must agree bit for bit do not.
    #[error("verification failed: {check}: {detail}")]
    Mismatch { check: String, detail: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn sizing(layer: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Sizing {
            layer: layer.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn plan(constraint: impl Into<String>) -> Self {
        Error::Plan {
            constraint: constraint.into(),
        }
    }

    /// Exit status for command-line use: 3 for verification mismatches,
    /// 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Mismatch { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
