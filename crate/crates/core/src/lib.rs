//! Amenability of locally finite trees: trimming dynamics, Følner witnesses,
//! exact isoperimetric search and Galton-Watson experiments.

pub mod amenability;
pub mod canonical;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod fixtures;
pub mod gw;
pub mod inessential;
pub mod oracle;
pub mod patch;
pub mod ratio;
pub mod tree;
pub mod trimming;

pub use error::{Error, Result, TreeViolation};
pub use ratio::Ratio;
pub use tree::{Tree, Trimmed, VertexId};
