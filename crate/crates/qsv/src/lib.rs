//! A parallel quantum-computer simulator.
//!
//! QU-bit registers are represented as an `s^M` complex amplitude vector
//! (`s` = 2 or 3) stored in a hierarchical, lazily allocated block
//! structure. Circuits are executed as sequences of pairwise "laser"
//! transformations, optionally with operational-error and decoherence
//! injection. The state vector can be partitioned across workers by
//! concatenated parallel-bit values, and an analytical cost model
//! predicts sequential and parallel execution times.
//!
//! The main pieces:
//!
//! - [`statevec`]: the hierarchical state vector and pair transforms
//! - [`gates`]: gate-level operations and their laser decompositions
//! - [`circuits`]: Shor factoring circuits and the benchmark catalog
//! - [`parallel`]: worker partitioning, reorganization and parallel runs
//! - [`costmodel`]: the closed-form execution-time model
//! - [`reference`]: a flat reference simulator used as a test oracle
//! - [`cli`]: configuration and entry points for the `qsv` binary

pub mod circuits;
pub mod cli;
pub mod costmodel;
pub mod gates;
pub mod parallel;
pub mod reference;
pub mod statevec;

mod error;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
