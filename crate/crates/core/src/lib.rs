//! Partition pruning of fully connected layers.
//!
//! A layer's `rows x cols` weight matrix is split into `p` balanced groups of
//! input and output nodes; only links inside a group survive, so the pruned
//! layer runs as `p` independent dense blocks. The partitioner searches for
//! the grouping that discards the least absolute weight, [`blockexec`] runs
//! the blocks, and [`perfmodel`] estimates their speed and energy on several
//! accelerators sharing one bus.

pub mod blockexec;
pub mod cli;
pub mod error;
pub mod gen;
pub mod io;
pub mod layer;
pub mod partitioner;
pub mod perfmodel;
pub mod rng;

pub use error::{Error, Result, Side, Violation};
pub use layer::{LinkMask, PartitionAssignment, PruneResult, WeightMatrix};
