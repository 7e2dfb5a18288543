//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants carry
//! enough context to point at the offending file, class id or parameter
//! without the caller having to re-derive it.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by raster I/O, spline fitting, perturbation and metric
/// accumulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// PNG encode/decode failure, annotated with the path involved.
    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    /// The file decoded fine but is not a single-channel 8-bit class-id map.
    #[error("not a label map: {path} ({detail})")]
    NotALabelMap { path: PathBuf, detail: String },

    /// 16-bit (or deeper) sample format where 8-bit is required.
    #[error("unsupported bit depth: {path} ({detail})")]
    UnsupportedBitDepth { path: PathBuf, detail: String },

    /// Decoded color type outside the supported grayscale/RGB set.
    #[error("unsupported color type: {path} ({detail})")]
    UnsupportedColorType { path: PathBuf, detail: String },

    /// Buffer length or image shape inconsistent with the declared geometry.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A pixel value or class id falls outside the declared class range.
    #[error("class id {id} out of range for {n_classes} classes")]
    ClassIdOutOfRange { id: u16, n_classes: usize },

    /// A scalar argument violates its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Keypoint sampling found nothing at or above the threshold.
    #[error("no boundary pixels above threshold (tau = {tau})")]
    NoBoundaryPixels { tau: f64 },

    /// Spline fitting on coincident or collinear control points.
    #[error("degenerate control points: {0}")]
    DegenerateControlPoints(String),

    /// Fixed and moving keypoint sets differ in length.
    #[error("keypoint count mismatch: {fixed} fixed vs {moving} moving")]
    KeyPointCountMismatch { fixed: usize, moving: usize },

    /// A masked reduction (average, lognormal fit) over zero pixels.
    #[error("empty segment: {0}")]
    EmptySegment(String),

    /// An aggregation restricted to a split containing no present class.
    #[error("empty split: no present class selected")]
    EmptySplit,

    /// A prediction map carries the ignore id, which is rejected by default.
    #[error("prediction carries ignore id {ignore_id} at pixel ({x}, {y})")]
    VoidPrediction { ignore_id: u16, x: usize, y: usize },

    /// Discriminator-side losses need logits for real samples.
    #[error("missing real-sample logits for discriminator-side loss")]
    MissingRealLogits,

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Request for a dataset this crate ships no reference data for.
    #[error("unknown dataset: {0:?} (expected one of coco-stuff, ade20k, cityscapes)")]
    UnknownDataset(String),

    /// Structurally invalid serialized artifact (manifest, metrics, split).
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

impl Error {
    /// Wrap an `std::io::Error` with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
