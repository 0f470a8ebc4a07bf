//! Error types shared across the library.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by mask handling, metric computation and ranking.
#[derive(Debug, Error)]
pub enum Error {
    /// Two masks that must share dimensions do not.
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(u32, u32, u32, u32),

    /// A byte stream could not be decoded in the requested format.
    #[error("decode error: {0}")]
    Decode(String),

    /// The stream decoded but violates the mask format contract
    /// (multi-channel image, label outside 16 bits, ragged grid, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid input data (unknown case id, missing metadata, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Invalid configuration (too few algorithms, empty table, bad range, ...).
    #[error("config error: {0}")]
    Config(String),
}
