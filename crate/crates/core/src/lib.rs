//! Message passing on sparse undirected networks.
//!
//! Every algorithm in this crate iterates a set of cavity messages, one per
//! directed edge, to a fixed point: bond percolation and giant components,
//! the zero-field Ising model, adjacency spectral densities, stochastic block
//! model inference, and percolation on networks with short loops. The
//! [`oracles`] module holds independent brute-force and simulation
//! references used to check them.

pub mod community;
pub mod engine;
pub mod error;
pub mod exec;
pub mod graph;
pub mod ising;
pub mod loopy;
pub mod nonbacktracking;
pub mod oracles;
pub mod percolation;
pub mod spectra;
pub mod sweep;

pub use engine::{FixedPointConfig, Init, IterationReport, MessageField, PayloadKind, Schedule};
pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::Graph;
pub use nonbacktracking::HalfEdgeIndex;
pub use sweep::SweepResult;
