//! Error type shared by the whole crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("buffer length {got} does not match {width}x{height}x{channels}")]
    BadBufferLength {
        got: usize,
        width: u32,
        height: u32,
        channels: u8,
    },

    #[error("unsupported channel count {0}, expected 1 or 3")]
    BadChannels(u8),

    #[error("raster dimensions must be positive")]
    EmptyRaster,

    #[error("layer is entirely zero, intensity normalization is undefined")]
    ZeroLayer,

    #[error("placement of {pw}x{ph} patch at ({x},{y}) exceeds {cw}x{ch} canvas")]
    OutOfBounds {
        x: u32,
        y: u32,
        pw: u32,
        ph: u32,
        cw: u32,
        ch: u32,
    },

    #[error("duplicate layer class `{0}`")]
    DuplicateClass(String),

    #[error("class `{0}` is not declared in the composite configuration")]
    UnknownClass(String),

    #[error("`background` denotes the absence of all planes and cannot be a labeled class")]
    BackgroundPlane,

    #[error("unknown degradation effect `{0}`")]
    UnknownEffect(String),

    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),

    #[error("prediction value {0} is outside [0, 1]")]
    BadPrediction(f64),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("label plane {path}: pixel value {value} is neither 0 nor 255")]
    InvalidLabelValue { path: PathBuf, value: u8 },

    #[error("missing plane file for class `{class}`: {path}")]
    MissingPlane { class: String, path: PathBuf },

    #[error("patch count {got} does not match grid ({rows}x{cols})")]
    PatchCountMismatch { got: usize, rows: u32, cols: u32 },

    #[error("Dice coefficient is undefined for every class")]
    AllClassesUndefined,

    #[error("source pool for class `{0}` is empty")]
    EmptyPool(String),

    #[error("pool weights must be positive and match the number of paths")]
    BadWeights,

    #[error("{path}: {source}")]
    ImageFile {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("unsupported pixel format in {0} (8-bit grayscale or RGB required)")]
    UnsupportedFormat(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
