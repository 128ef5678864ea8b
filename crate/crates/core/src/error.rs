use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    /// The quantity diverges at this argument (e.g. a rate bound at ε = 1).
    #[error("{what} diverges: {detail}")]
    Divergence { what: &'static str, detail: String },

    /// A lemma or theorem hypothesis is not met. `admissible` describes the
    /// range the caller should have used.
    #[error("precondition failed for {what}: {detail} (admissible: {admissible})")]
    Precondition {
        what: &'static str,
        detail: String,
        admissible: String,
    },

    /// A proven inequality came out violated. This is always an arithmetic or
    /// linear-algebra bug, never a counterexample.
    #[error("theorem violation in {what}: {detail}")]
    TheoremViolation { what: &'static str, detail: String },

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// No parameter value reaches the requested target.
    #[error("no solution for {what}: target {target} outside feasible interval [{lo}, {hi}]")]
    NoSolution {
        what: &'static str,
        target: f64,
        lo: f64,
        hi: f64,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}
