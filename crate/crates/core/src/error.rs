use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample space has no points")]
    EmptySpace,
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("point {0:?} has non-positive mass")]
    NonpositiveMass(String),
    #[error("total mass exceeds one")]
    MassExceedsOne,
    #[error("{labels} labels but {masses} masses")]
    LengthMismatch { labels: usize, masses: usize },
    #[error("elements live on different sample spaces")]
    SpaceMismatch,
    #[error("parameter must be non-negative")]
    NegativeParameter,
    #[error("transcendental function requested on the rational backend")]
    TranscendentalOnRationalBackend,
    #[error("element is not constant on the partition blocks")]
    FNotInRange,
    #[error("input must be non-negative")]
    NegativeInput,
    #[error("element {0} is not a component of the unit")]
    NotAComponent(usize),
    #[error("{0} components exceed the exhaustive independence test limit of 16")]
    TooManyComponents(usize),
    #[error("element is not non-negative integer valued")]
    NotIntegerValued,
    #[error("partition block {0} is empty")]
    EmptyBlock(usize),
    #[error("point {0:?} appears in more than one block")]
    BlocksOverlap(String),
    #[error("point {0:?} is not covered by the partition")]
    BlocksDoNotCover(String),
    #[error("unknown point label {0:?}")]
    UnknownLabel(String),
    #[error("index j = {j} exceeds the configured j_max = {j_max}")]
    JTooLarge { j: usize, j_max: usize },
    #[error("invalid indices: {0}")]
    BadIndices(String),
    #[error("sets are not pairwise disjoint")]
    SetsNotDisjoint,
    #[error("family has no components")]
    EmptyFamily,
    #[error("family is not conditionally independent (residual {0})")]
    NotIndependent(f64),
    #[error("component index {index} out of range for a family of {len}")]
    BadIndex { index: usize, len: usize },
    #[error("model too large: {0}")]
    TooLarge(String),
    #[error("probability outside [0, 1]: {0}")]
    BadProbability(String),
    #[error("sequence did not converge within {0} terms")]
    NotConverged(usize),
    #[error("parameter grid is empty")]
    GridEmpty,
    #[error("no such example: {0}")]
    BadExample(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid model at {field}: {message}")]
    Validation { field: String, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
