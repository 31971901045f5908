use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("covariate matrix is rank deficient (rank {rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("at-risk probability underflow at elapsed time {tau}")]
    AtRiskUnderflow { tau: f64 },
    #[error("probability {value} outside [0, 1] beyond quadrature noise")]
    ProbabilityOutOfRange { value: f64 },
    #[error("degenerate truncation: no probability mass below {tau}")]
    DegenerateTruncation { tau: f64 },
    #[error("subject {subject}: {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<Error>,
    },
    #[error("enumeration of {m} Bernoulli trials exceeds the brute-force limit of {limit}")]
    TooLarge { m: usize, limit: usize },
    #[error("bootstrap failed: {dropped} of {requested} replicates dropped")]
    Bootstrap { dropped: usize, requested: usize },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn for_subject(subject: &str, source: Error) -> Self {
        Error::Subject {
            subject: subject.to_string(),
            source: Box::new(source),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Config(_) | Error::Json(_) => 2,
            Error::InsufficientData(_) | Error::RankDeficient { .. } | Error::InvalidModel(_) => 3,
            Error::Calibration(_) => 4,
            Error::Bootstrap { .. } | Error::DegenerateTruncation { .. } => 5,
            Error::Subject { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
