use alloc::string::String;

/// Every failure the core library can report.
///
/// Variants are grouped by the stage that raises them so callers can map
/// them onto exit codes (data vs numerical vs configuration).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    // -- data / schema
    #[error("schema: {0}")]
    Schema(String),
    #[error("row {row}, column `{column}`: category `{label}` is not declared in the schema")]
    UnseenCategory { row: usize, column: String, label: String },
    #[error("row {row}, column `{column}`: cannot parse `{text}` as a number")]
    BadNumber { row: usize, column: String, text: String },
    #[error("row {row}, column `{column}`: categorical value is missing")]
    MissingCategory { row: usize, column: String },
    #[error("row {row}: outcome `{text}` is not binary (expected 0 or 1)")]
    NonBinaryOutcome { row: usize, text: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowWidth { row: usize, expected: usize, found: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("split: {0}")]
    Split(String),
    #[error("variable `{0}` is entirely missing in the imputation source partition")]
    AllMissing(String),
    #[error("variable `{variable}` is missing at row {row}; run median imputation before encoding")]
    MissingValue { variable: String, row: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),

    // -- numerical
    #[error("need both outcome classes: {0}")]
    SingleClass(String),
    #[error("correlation matrix is singular: `{0}` and `{1}` are exactly collinear")]
    Collinear(String, String),
    #[error("correlation matrix is singular")]
    Singular,
    #[error("variable `{0}` is constant")]
    Constant(String),
    #[error("logistic fit failed: {0}")]
    Fit(String),
    #[error("near-optimal sampling: {0}")]
    Sampling(String),
    #[error("bootstrap: {0}")]
    Bootstrap(String),
    #[error("importance: {0}")]
    Importance(String),
    #[error("pooling needs at least 3 models, got {0}")]
    TooFewModels(usize),
    #[error("no variable has significant overall importance; try a larger epsilon or more data")]
    NoneSignificant,
    #[error("cuts: {0}")]
    Cuts(String),
    #[error("all shifted coefficients are zero; the selected variables do not discriminate")]
    NoDiscrimination,
    #[error("scoring: {0}")]
    Scoring(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for failures caused by the data rather than by numerics or configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::UnseenCategory { .. }
                | Error::BadNumber { .. }
                | Error::MissingCategory { .. }
                | Error::NonBinaryOutcome { .. }
                | Error::RowWidth { .. }
                | Error::Empty
                | Error::UnknownVariable(_)
                | Error::Split(_)
                | Error::AllMissing(_)
                | Error::MissingValue { .. }
                | Error::Shape(_)
        )
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
