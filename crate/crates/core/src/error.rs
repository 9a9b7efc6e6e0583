use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("outcome vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: String,
        domain: &'static str,
    },

    #[error("unknown observer `{0}`")]
    UnknownObserver(String),

    #[error("kappa bounds are undefined at c_exp = 1")]
    UndefinedKappaBounds,

    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid identifier: {0}")]
    InvalidId(String),

    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// An error raised while reading one input file.
    #[error("{path}: {error}")]
    InFile { path: String, error: Box<Error> },

    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),

    #[error("duplicate (observer, trial) rows: {}", describe_duplicates(.0))]
    Duplicates(Vec<DuplicateRows>),

    #[error("observer `{0}` has no group label")]
    MissingGroup(String),

    #[error("observer `{observer}` has no response for trial `{trial}`")]
    MissingTrial { observer: String, trial: String },

    #[error("observers share no trials")]
    EmptyIntersection,

    #[error("row for observer `{observer}`, trial `{trial}` carries neither is_correct nor expected/response")]
    NoCorrectness { observer: String, trial: String },

    #[error("percentile table was simulated for n = {table} trials but the data has n = {data}")]
    TableMismatch { table: usize, data: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl std::fmt::Debug, domain: &'static str) -> Self {
        Error::Domain {
            what,
            value: format!("{value:?}"),
            domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by broken internal invariants rather than bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::InFile { error, .. } => error.is_internal(),
            _ => false,
        }
    }
}

/// All rows sharing one (observer, trial) key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateRows {
    pub observer: String,
    pub trial: String,
    /// Where each copy was found, e.g. `responses.csv:12`.
    pub locations: Vec<String>,
}

fn describe_duplicates(dups: &[DuplicateRows]) -> String {
    dups.iter()
        .map(|d| {
            if d.locations.is_empty() {
                format!("`{}`/`{}`", d.observer, d.trial)
            } else {
                format!("`{}`/`{}` at {}", d.observer, d.trial, d.locations.join(" and "))
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}
