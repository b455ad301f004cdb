use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors across the crate: contract violations, bad configuration, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("duplicate edge ({user}, {item})")]
    DuplicateEdge { user: u32, item: u32 },

    #[error("empty edge list")]
    EmptyEdgeList,

    #[error("{kind} ids are not contiguous from 0: id {missing} has no links")]
    NonContiguousIds { kind: &'static str, missing: u32 },

    #[error("{kind} id {id} out of range (< {bound} required)")]
    IdOutOfRange { kind: &'static str, id: u32, bound: u32 },

    #[error("link ({user}, {item}) does not exist")]
    MissingLink { user: u32, item: u32 },

    #[error("link ({user}, {item}) already exists")]
    LinkExists { user: u32, item: u32 },

    #[error("user {user} has no links")]
    UserWithoutLinks { user: u32 },

    #[error("self-similarity of item {item} is undefined")]
    SelfSimilarity { item: u32 },

    #[error("recommendation list is empty")]
    EmptyList,

    #[error("all items are excluded from selection")]
    AllItemsExcluded,

    #[error("degree vector is all zeros; metric undefined")]
    AllZeroDegrees,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no eligible users for evaluation")]
    NoEligibleUsers,

    #[error("all recommendation lists are empty")]
    AllListsEmpty,

    #[error("infeasible density target: {0}")]
    InfeasibleTarget(String),

    #[error("{path}:{line}: {msg}")]
    MalformedLine { path: String, line: usize, msg: String },

    #[error("ingest produced zero links")]
    ZeroLinks,

    #[error("snapshot is inconsistent: {0}")]
    BadSnapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
