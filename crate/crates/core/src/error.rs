use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported wavelet {0}")]
    UnsupportedWavelet(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("watermark region is empty: band has {band_rows} rows, fraction {fraction}")]
    RegionTooSmall { band_rows: usize, fraction: f64 },

    #[error("bit plane {0} out of range 1..=8")]
    PlaneOutOfRange(u8),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("pattern contains a non-binary value {0}")]
    NonBinaryInput(u8),

    #[error("malformed PDF{}: {reason}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    MalformedPdf {
        offset: Option<usize>,
        reason: String,
    },

    #[error("encrypted PDF documents are not supported")]
    EncryptedPdf,

    #[error("unsupported image codec for object {object} {generation}: {detail}")]
    UnsupportedCodec {
        object: u32,
        generation: u16,
        detail: String,
    },

    #[error("cannot decode image: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn malformed(reason: impl Into<String>) -> Self {
        Error::MalformedPdf {
            offset: None,
            reason: reason.into(),
        }
    }
}

impl From<lopdf::Error> for Error {
    fn from(err: lopdf::Error) -> Self {
        let offset = match &err {
            lopdf::Error::IndirectObject { offset } => Some(*offset),
            lopdf::Error::InvalidOffset(offset) => Some(*offset),
            _ => None,
        };
        let mut reason = err.to_string();
        let mut source = std::error::Error::source(&err);
        while let Some(inner) = source {
            reason.push_str(": ");
            reason.push_str(&inner.to_string());
            source = inner.source();
        }
        Error::MalformedPdf { offset, reason }
    }
}

impl From<image::ImageError> for Error {
    fn from(err: image::ImageError) -> Self {
        Error::Decode(err.to_string())
    }
}
