use std::path::PathBuf;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown test problem '{0}'")]
    UnknownProblem(String),

    #[error("point {point:?} is outside the problem domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("no feasible candidates remain (all candidates already explored)")]
    NoFeasibleCandidates,

    #[error("run aborted after {evaluated} evaluations: {source}")]
    RunAborted {
        evaluated: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {reps} replications failed")]
    AllReplicationsFailed { reps: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse {what}: {detail}")]
    Parse { what: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
