use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training split is empty")]
    EmptyTraining,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("intersection requires at least one box")]
    EmptyIntersection,

    #[error("backward needs a scalar root, node has {0} elements")]
    NonScalarRoot(usize),

    #[error("cannot draw {requested} negatives: only {available} non-answer entities")]
    NotEnoughNegatives { requested: usize, available: usize },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged { step: usize, loss: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
