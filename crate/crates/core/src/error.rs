use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("gltf: {0}")]
    Gltf(String),

    #[error("no geometry")]
    NoGeometry,

    #[error("atlas overflow: {charts} charts do not fit at resolution {resolution}")]
    AtlasOverflow { charts: usize, resolution: u32 },

    #[error("empty layout")]
    EmptyLayout,

    #[error("layout is not certified injective at resolution {requested} (certified: {certified:?})")]
    NotCertified {
        requested: u32,
        certified: Option<u32>,
    },

    #[error("injectivity violated: {conflicts} conflicting pixels")]
    NotInjective { conflicts: usize },

    #[error("invalid geometry image: {0}")]
    InvalidImage(String),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("exr: {0}")]
    Exr(#[from] exr::error::Error),

    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
