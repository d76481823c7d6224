pub mod blocks;
pub mod calculus;
pub mod codec;
pub mod commands;
pub mod entropy;
pub mod error;
pub mod image;
pub mod metrics;
pub mod pops;
pub mod tensor;

pub use error::{Error, Result};
