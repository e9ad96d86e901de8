//! Error types shared across the pipeline.

use thiserror::Error;

/// Unified error type for every pipeline stage.
#[derive(Debug, Error)]
pub enum WeldmonError {
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),

    #[error("CorruptFile: {0}")]
    CorruptFile(String),

    #[error("UnsupportedVersion: format version {0} is not supported")]
    UnsupportedVersion(u32),

    #[error("InvalidManifest: {0}")]
    InvalidManifest(String),

    #[error("InvalidSegment: {0}")]
    InvalidSegment(String),

    #[error("MissingChannel: {0}")]
    MissingChannel(String),

    #[error("NoHornMove: stage-1 threshold never crossed")]
    NoHornMove,

    #[error("NoWeldOnset: stage-2 threshold never crossed after horn move")]
    NoWeldOnset,

    #[error("SegmentOutOfBounds: {0}")]
    SegmentOutOfBounds(String),

    #[error("InputTooShort: {0}")]
    InputTooShort(String),

    #[error("InvalidFilterbank: {0}")]
    InvalidFilterbank(String),

    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),

    #[error("InsufficientClassSamples: class {0} has fewer than 2 samples")]
    InsufficientClassSamples(usize),

    #[error("TooFewSamples: {0}")]
    TooFewSamples(String),

    #[error("DegenerateDataset: {0}")]
    DegenerateDataset(String),

    #[error("EmptyClass: {0}")]
    EmptyClass(String),

    #[error("InsufficientSamples: {0}")]
    InsufficientSamples(String),

    #[error("LeakageDetected: {0}")]
    LeakageDetected(String),

    #[error("InternalInvariant: {0}")]
    Internal(String),
}

impl WeldmonError {
    /// Stable name of the error variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            WeldmonError::InvalidSpec(_) => "InvalidSpec",
            WeldmonError::Io(_) => "IoError",
            WeldmonError::CorruptFile(_) => "CorruptFile",
            WeldmonError::UnsupportedVersion(_) => "UnsupportedVersion",
            WeldmonError::InvalidManifest(_) => "InvalidManifest",
            WeldmonError::InvalidSegment(_) => "InvalidSegment",
            WeldmonError::MissingChannel(_) => "MissingChannel",
            WeldmonError::NoHornMove => "NoHornMove",
            WeldmonError::NoWeldOnset => "NoWeldOnset",
            WeldmonError::SegmentOutOfBounds(_) => "SegmentOutOfBounds",
            WeldmonError::InputTooShort(_) => "InputTooShort",
            WeldmonError::InvalidFilterbank(_) => "InvalidFilterbank",
            WeldmonError::ShapeMismatch(_) => "ShapeMismatch",
            WeldmonError::InsufficientClassSamples(_) => "InsufficientClassSamples",
            WeldmonError::TooFewSamples(_) => "TooFewSamples",
            WeldmonError::DegenerateDataset(_) => "DegenerateDataset",
            WeldmonError::EmptyClass(_) => "EmptyClass",
            WeldmonError::InsufficientSamples(_) => "InsufficientSamples",
            WeldmonError::LeakageDetected(_) => "LeakageDetected",
            WeldmonError::Internal(_) => "InternalInvariant",
        }
    }

    /// Process exit code class for the CLI: 3 = data error, 4 = internal
    /// invariant violation (usage errors exit 2 before any error is built).
    pub fn exit_code(&self) -> i32 {
        match self {
            WeldmonError::LeakageDetected(_) | WeldmonError::Internal(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, WeldmonError>;
