//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error in an architecture document, with 1-based position.
    #[error("arch syntax error at line {line}, column {col}: {msg}")]
    ArchSyntax { line: usize, col: usize, msg: String },

    /// A key that is not part of the architecture document schema.
    #[error("unknown key `{key}` at line {line}")]
    ArchUnknownKey { key: String, line: usize },

    /// A value outside its documented range (e.g. sb_percentage 150).
    #[error("value out of range at line {line}: {msg}")]
    ArchValue { line: usize, msg: String },

    /// The spec failed validation; callers wanting the full list should use
    /// [`crate::arch::validate`] directly.
    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    /// Malformed routing-resource-graph interchange document.
    #[error("rrg format error at line {line}: {msg}")]
    RrgFormat { line: usize, msg: String },

    /// Malformed or unsupported BLIF input.
    #[error("blif error at line {line}: {msg}")]
    Blif { line: usize, msg: String },

    /// Malformed site-list CSV.
    #[error("site list error at line {line}: {msg}")]
    SiteCsv { line: usize, msg: String },

    #[error("packing failed: {0}")]
    Pack(String),

    #[error("placement failed: {0}")]
    Place(String),

    /// Negotiated-congestion routing gave up; carries the overused node ids.
    #[error("unroutable after {iterations} iterations; {} overused nodes (first: {:?})",
            overused.len(), overused.first())]
    Unroutable { iterations: u32, overused: Vec<u32> },

    #[error("timing analysis failed: {0}")]
    Timing(String),

    /// A routed edge that the fabric model does not contain (spec mismatch).
    #[error("bitstream generation: routed edge {src} -> {dst} not present in fabric model")]
    EdgeNotInModel { src: u32, dst: u32 },

    #[error("bitstream error: {0}")]
    Bitstream(String),

    /// Combinational loop hit while simulating a (corrupted) programmed fabric.
    #[error("combinational loop through misconfigured muxes: {0:?}")]
    FabricLoop(Vec<String>),

    #[error("fabric model error: {0}")]
    Fabric(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
