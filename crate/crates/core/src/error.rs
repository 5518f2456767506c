use thiserror::Error;

/// Errors reported by the retroactive structures and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} outside 1..=8")]
    BadDimension(usize),
    #[error("bits per coordinate {0} outside 1..=31")]
    BadBits(u32),
    #[error("point has dimension {got}, structure expects {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("coordinate {0} outside the unit interval")]
    CoordinateOutOfRange(f64),
    #[error("fixed-point coordinate {0} does not fit the configured bit width")]
    FixedOutOfRange(u64),
    #[error("empty lifespan: start {start} is not before end {end}")]
    InvalidInterval { start: i64, end: i64 },
    #[error("query parameter {0} must be positive and finite")]
    BadQueryParameter(&'static str),
    #[error("unknown handle {0}")]
    UnknownHandle(u64),
    #[error("duplicate handle {0}")]
    DuplicateHandle(u64),
    #[error("element ({key}, color {color}) already present")]
    DuplicateElement { key: u64, color: u8 },
    #[error("element ({key}, color {color}) not present")]
    MissingElement { key: u64, color: u8 },
    #[error("key {key} outside universe of size 2^{bits}")]
    KeyOutOfUniverse { key: u64, bits: u32 },
    #[error("color {0} outside the alphabet")]
    BadColor(u8),
    #[error("{0}")]
    Precondition(&'static str),
    #[error("point not present in the quadtree")]
    PointNotFound,
    #[error("cell is not a node of the quadtree")]
    CellNotFound,
    #[error("structural audit failed: {0}")]
    Audit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
