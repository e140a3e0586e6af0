use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not invariant: block {block} deviates by {deviation:.3e}")]
    NotInvariant { block: usize, deviation: f64 },

    #[error("matrix is not equivariant: commutator norm {residual:.3e}")]
    NotEquivariant { residual: f64 },

    #[error("realization pattern violated at block ({row}, {col}) by {deviation:.3e}")]
    NotRealization { row: usize, col: usize, deviation: f64 },

    #[error("rank-deficient data: rank(XX^T) = {rank} < {expected}; supply a ridge term to regularize")]
    RankDeficient { rank: usize, expected: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    Indefinite { eigenvalue: f64 },

    #[error("matrix is not symmetric: asymmetry {asymmetry:.3e}")]
    Asymmetric { asymmetry: f64 },

    #[error("rank vector is not admissible: {0}")]
    Inadmissible(String),

    #[error("odd rank {rank} on complex-pair block ({l}, {m}); not in any real component")]
    OddPairRank { l: usize, m: usize, rank: usize },

    #[error("component count {count} exceeds limit {limit}")]
    LimitExceeded { count: String, limit: u64 },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Dimension(_) => "dimension",
            Error::NotInvariant { .. } => "not_invariant",
            Error::NotEquivariant { .. } => "not_equivariant",
            Error::NotRealization { .. } => "not_realization",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Indefinite { .. } => "indefinite",
            Error::Asymmetric { .. } => "asymmetric",
            Error::Inadmissible(_) => "inadmissible",
            Error::OddPairRank { .. } => "odd_pair_rank",
            Error::LimitExceeded { .. } => "limit_exceeded",
            Error::SizeCap(_) => "size_cap",
            Error::Unsupported(_) => "unsupported",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
