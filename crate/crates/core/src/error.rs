use thiserror::Error;

pub type Result<T> = std::result::Result<T, IlmError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IlmError {
    #[error("bit length {0} outside supported range 1..={1}")]
    BitLength(usize, usize),

    #[error("meaning length {n1} exceeds signal length {n3}")]
    MeaningLongerThanSignal { n1: usize, n3: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("baseline {0} must be below 1")]
    Baseline(f64),

    #[error("network dimension must be at least 1 (got {0:?})")]
    ZeroDimension([usize; 3]),

    #[error("learning rate must be positive and finite (got {0})")]
    LearningRate(f64),

    #[error("non-finite loss during training")]
    NonFiniteLoss,

    #[error("cannot draw {k} distinct meanings from a space of {space}")]
    SampleTooLarge { k: usize, space: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl IlmError {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        IlmError::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
