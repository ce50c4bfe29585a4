use thiserror::Error;

/// Errors produced by map operations, scene queries, the renderer and the
/// benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("map dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("kernel size {0} must be odd")]
    EvenKernel(usize),

    #[error("kernel size {size} exceeds limit {limit} for a {width}x{height} map")]
    KernelTooLarge {
        size: usize,
        limit: usize,
        width: usize,
        height: usize,
    },

    #[error("map must be at least 1x1, got {0}x{1}")]
    EmptyMap(usize, usize),

    #[error("data length {len} does not match {width}x{height}")]
    BadDataLength {
        len: usize,
        width: usize,
        height: usize,
    },

    #[error("silhouette contains non-binary value {value} at pixel ({x},{y})")]
    NonBinarySilhouette { value: f32, x: usize, y: usize },

    #[error("weight map contains {what} at pixel ({x},{y})")]
    InvalidWeightMap {
        what: &'static str,
        x: usize,
        y: usize,
    },

    #[error("image side {side} is not divisible by n_patch {n_patch}")]
    IndivisiblePatches { side: usize, n_patch: usize },

    #[error("sample count {0} must be at least 2")]
    BadSampleCount(usize),

    #[error("density query returned NaN at pixel ({x},{y}) sample {sample}")]
    NanDensity { x: usize, y: usize, sample: usize },

    #[error("point ({0}, {1}, {2}) is {3} world units from the nearest surface (tolerance {4})")]
    OffSurface(f32, f32, f32, f32, f32),

    #[error("primitive {index} leaves the camera frustum at frame {frame}")]
    PrimitiveOutsideFrustum { index: usize, frame: usize },

    #[error("invalid camera: {0}")]
    BadCamera(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("duplicate run label: {0}")]
    DuplicateLabel(String),

    #[error("bad map container: {0}")]
    BadContainer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
