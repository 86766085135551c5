use thiserror::Error;

#[derive(Debug, Error)]
pub enum FdeError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    InvalidMatrix { row: usize, col: usize },

    #[error("singular geometry: normal matrix condition estimate {condition:.3e}")]
    SingularGeometry { condition: f64 },

    #[error("too few measurements: got {got}, need at least {need}")]
    TooFewMeasurements { got: usize, need: usize },

    #[error("insufficient dimension: {0}")]
    InsufficientDimension(String),

    #[error("subset enumeration of {requested} combinations exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("rate undefined: pool contains no {0} measurements")]
    UndefinedRate(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FdeError>;
