use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid box ({x}, {y}, {width}, {height}): width and height must be positive and finite")]
    InvalidBox {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },

    #[error("box lies entirely outside the {width}x{height} image")]
    EmptyAfterClip { width: f64, height: f64 },

    #[error("image {width}x{height} is too small for spectral saliency (minimum side is 8)")]
    ImageTooSmall { width: usize, height: usize },

    #[error("size mismatch: image is {image_w}x{image_h}, saliency map is {map_w}x{map_h}")]
    SizeMismatch {
        image_w: usize,
        image_h: usize,
        map_w: usize,
        map_h: usize,
    },

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("proposals for image `{proposals}` paired with ground truth of image `{truth}`")]
    ImageIdMismatch { proposals: String, truth: String },

    #[error("image id `{0}` is not present in the manifest")]
    UnknownImageId(String),

    #[error("merge source class `{0}` is not in the category table")]
    UnknownSourceClass(String),

    #[error("invalid class merge map: {0}")]
    InvalidMergeMap(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("task {0} is not part of the schedule")]
    UnknownTask(u32),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid task schedule: {0}")]
    InvalidSchedule(String),

    #[error("requested {requested} images but only {available} are available")]
    InsufficientImages { requested: usize, available: usize },

    #[error("operation requires a {expected} split manifest")]
    WrongSplit { expected: &'static str },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("precision over known and unknown truth is zero or undefined")]
    DegenerateDenominator,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("bad float plane file: {0}")]
    BadFloatPlane(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
