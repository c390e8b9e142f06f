use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance of length {len} is shorter than hypothesis depth {depth}")]
    InstanceTooShort { len: usize, depth: u32 },

    #[error("cannot refine depth {from} down to {to}")]
    RefineToShallower { from: u32, to: u32 },

    #[error("depth {depth} exceeds the configured cap {cap}")]
    DepthCap { depth: u32, cap: u32 },

    #[error("invalid depth {0}: must be at least 1")]
    ZeroDepth(u32),

    #[error("cell {cell} does not fit in {depth} bits")]
    CellOutOfRange { cell: u64, depth: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("weight w({n}) is zero")]
    ZeroWeight { n: u32 },

    #[error("invalid weight scheme: {0}")]
    InvalidWeights(String),

    #[error("hypotheses {first} and {second} overlap")]
    NotDisjoint { first: usize, second: usize },

    #[error("{what} exceeds brute-force cap ({limit})")]
    CapExceeded { what: &'static str, limit: u64 },

    #[error("exact class size 2^(2^{n}) does not fit in 64 bits")]
    ClassSizeOverflow { n: u32 },

    #[error("empty class-index range [{min}, {max}]")]
    EmptyRange { min: u32, max: u32 },

    #[error("split ratio {ratio} of {m} examples leaves an empty part")]
    DegenerateSplit { ratio: f64, m: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain { name, value, domain }
    }
}
