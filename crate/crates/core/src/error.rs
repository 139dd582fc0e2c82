use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("basis columns are linearly dependent over the fraction field")]
    SingularBasis,
    #[error("ambient rank mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },
    #[error("second lattice is not contained in the first")]
    NotContained,
    #[error("invalid parabolic chain: {0}")]
    InvalidChain(String),
    #[error("invalid grading: {0}")]
    InvalidGrading(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),
    #[error("inadmissible profile at branch {branch:?}: s = {s} but r*e = {r}*{e} = {}", r * e)]
    InadmissibleProfile {
        branch: String,
        s: u32,
        r: u32,
        e: u32,
    },
    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),
    #[error("not a pairing: {0}")]
    NotAPairing(String),
    #[error("value line mismatch: {0}")]
    ValueLineMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
