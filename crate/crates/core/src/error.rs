use thiserror::Error;

/// Errors raised by the identification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rank-deficient least-squares stack: dependent columns {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error(
        "insufficient excitation for joint {joint}: condition number {condition:.3e} exceeds \
         {limit:.1e}; the excitation trajectory is not persistently exciting"
    )]
    InsufficientExcitation {
        joint: usize,
        condition: f64,
        limit: f64,
    },

    #[error("too few samples for joint {joint}: {found} in region, need at least {required}")]
    TooFewSamples {
        joint: usize,
        found: usize,
        required: usize,
    },

    #[error("friction fit diverged for joint {joint} from every start: {diagnostics}")]
    FitDiverged { joint: usize, diagnostics: String },

    #[error("payload does not excite the gain estimation (all payload columns below {floor:.1e})")]
    PayloadNotExciting { floor: f64 },

    #[error("infeasible gain bounds for joint {joint}: lower {lower} >= upper {upper}")]
    InfeasibleBounds { joint: usize, lower: f64, upper: f64 },

    #[error("incomplete robot model: missing {0}")]
    IncompleteModel(&'static str),

    #[error("stage '{missing}' must be completed before '{requested}'")]
    StageOrder {
        missing: &'static str,
        requested: &'static str,
    },

    #[error("schema error: {0}")]
    Schema(#[from] SchemaError),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// File-format problems, each named distinctly.
#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("ragged row at line {line}: expected {expected} fields, got {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in column '{column}' at line {line}")]
    NonFinite { line: usize, column: String },

    #[error("unparsable value '{value}' in column '{column}' at line {line}")]
    BadNumber {
        line: usize,
        column: String,
        value: String,
    },

    #[error("bad scenario tag '{value}' at line {line} (expected 'a' or 'b')")]
    BadScenario { line: usize, value: String },

    #[error("mixed scenario tags in one sample file")]
    MixedScenario,

    #[error("non-uniform sample period at line {line}")]
    NonUniformPeriod { line: usize },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the command-line driver: 2 schema, 3 numeric, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) | Error::Io { .. } => 2,
            Error::RankDeficient { .. }
            | Error::InsufficientExcitation { .. }
            | Error::TooFewSamples { .. }
            | Error::FitDiverged { .. }
            | Error::PayloadNotExciting { .. }
            | Error::InfeasibleBounds { .. }
            | Error::Numeric(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
