use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was applied outside its mathematical domain
    /// (division by an interval containing zero, fractional power of a
    /// negative base, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A kink of `abs` or of a fractional power lies strictly inside the
    /// evaluation interval and strict differentiation was requested.
    #[error("non-smooth point inside evaluation interval: {0}")]
    NonSmooth(String),

    /// Expression syntax error. `position` is the 1-based character column.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("branch {branch} is not expanding: |T'| enclosure {enclosure} contains 0")]
    NotExpanding { branch: usize, enclosure: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// Enclosures are too wide to separate quantities that must be separated.
    #[error("precision error: {0}")]
    Precision(String),

    /// The preimage of the target under the branch is empty. Callers treat
    /// this as an ordinary outcome.
    #[error("empty preimage")]
    EmptyPreimage,

    #[error("expansion too weak: {0}")]
    ExpansionTooWeak(String),

    /// The coarse contraction target was not met within the step cap.
    #[error("no contraction: best lambda2 <= {best_lambda2} at n = {best_n} (target {target})")]
    NoContraction {
        best_n: usize,
        best_lambda2: f64,
        target: f64,
        trace: Vec<(usize, f64, f64)>,
    },

    /// An internal consistency check failed (assembly bug).
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
