//! Retroactive approximate spatial queries over points with lifespans.

pub mod color;
pub mod error;
pub mod exact;
pub mod gusf;
pub mod gveb;
pub mod oracle;
pub mod order;
pub mod par;
pub mod probe;
pub mod quadtree;
pub mod script;
pub mod segtree;
pub mod spatial;
pub mod zorder;

pub use color::ColorSet;
pub use error::{Error, Result};
pub use probe::Probe;
