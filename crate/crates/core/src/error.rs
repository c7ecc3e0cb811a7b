use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected: the relation through `{0}` is not antisymmetric")]
    Cycle(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("labels must be non-empty")]
    EmptyLabel,
    #[error("a poset needs at least one element")]
    EmptyPoset,
    #[error("reserved root label `{0}` is already in use")]
    ReservedLabel(String),
    #[error("poset has no unique maximum element")]
    NoRoot,
    #[error("relation is not a strict partial order: {0}")]
    NotStrictOrder(String),
    #[error("`{upper}` > `{lower}` does not hold in the order")]
    NotInOrder { upper: String, lower: String },
    #[error("invalid derivation tree: {0}")]
    InvalidTree(String),
    #[error("no candidate in-arc reaches `{0}`")]
    Unreachable(String),
    #[error("invalid user assignment: {0}")]
    InvalidUsers(String),
    #[error("invalid key allocation: {0}")]
    InvalidAllocation(String),
    #[error("invalid chain partition: {0}")]
    InvalidPartition(String),
    #[error("PRF key must be {expected} bytes, got {actual}")]
    KeyLength { expected: usize, actual: usize },
    #[error("`{target}` is not below `{holder}`; derivation refused")]
    Unauthorized { holder: String, target: String },
    #[error("malformed secret bundle: {0}")]
    MalformedBundle(String),
    #[error("instance too large to enumerate ({0} candidate trees)")]
    InstanceTooLarge(u128),
    #[error("randomness source failed: {0}")]
    Randomness(String),
    #[error("PRF self-check failed")]
    SelfCheck,
    #[error("invalid hex value: {0}")]
    Hex(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
