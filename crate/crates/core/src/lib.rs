//! Community-enhanced link prediction.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`graph`]: compressed adjacency, BFS, edge splits.
//! - [`community`]: fluid-community partitioning and partition utilities.
//! - [`centrality`]: PageRank, degree, betweenness and closeness, community centers.
//! - [`encoding`]: distance-to-center structural encodings fused with node features.
//! - [`enhance`]: candidate generation and confidence-guided edge completion/pruning.
//! - [`features`]: sketch-based distance-encoding, truncated-PPR path and community pair features.
//! - [`scorer`]: node encoder, pair head, composite loss and training.
//! - [`eval`]: heuristic baselines, HR@k, multi-seed evaluation and sweeps.
//! - [`sbm`], [`io`], [`config`], [`pipeline`]: synthetic data, file formats and orchestration.

pub mod centrality;
pub mod community;
pub mod config;
pub mod encoding;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod sbm;
pub mod scorer;

pub use error::{CelpError, Result};
pub use graph::{Graph, NodeId};
