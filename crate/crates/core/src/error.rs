use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("empty multi-index")]
    EmptyWord,
    #[error("point {0} is not in the image of any branch")]
    NotResolvable(String),
    #[error("{0} is not a branch point")]
    NotBranchPoint(String),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("field is not a member of the module: {0}")]
    NotInModule(String),
    #[error("scalar field does not vanish on the branch set: {0}")]
    NotVanishing(String),
    #[error("Assumption B does not hold: {0}")]
    AssumptionB(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
