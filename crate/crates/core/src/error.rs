use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite sample at flat index {index}")]
    NonFinite { index: usize },

    #[error("matrix field is not skew-symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSkew { asymmetry: f64 },

    #[error("field has non-zero mean (relative mean {mean:.3e})")]
    NonZeroMean { mean: f64 },

    #[error("bump support of radius {radius} around {center:?} leaves the box; need box length >= {required_box:.4}")]
    SupportViolation {
        center: Vec<f64>,
        radius: f64,
        required_box: f64,
    },

    #[error("diffeomorphism inversion did not converge after {iterations} iterations (residual {residual:.3e})")]
    Inversion { iterations: usize, residual: f64 },

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("flow left the diffeomorphism chart at t = {t} (min det = {min_det:.3e})")]
    LeftChart { t: f64, min_det: f64 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
