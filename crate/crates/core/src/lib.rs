//! Simulation of the block-counting and external-branch processes of
//! Beta(2−α, α)-coalescents, with the stable limit laws of the number of
//! collisions and of the total and external branch lengths.
//!
//! The fast path ([`chain`], [`external`]) works on block counts only. The
//! [`oracle`] module tracks full partitions and is used to validate it.

pub mod chain;
pub mod error;
pub mod external;
pub mod harness;
pub mod oracle;
pub mod rates;
pub mod rng;
pub mod special;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use rates::AlphaParam;
