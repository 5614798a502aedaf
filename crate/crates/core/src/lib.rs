//! Scalable attributed-graph clustering.
//!
//! Node features are smoothed by repeated multiplication with the
//! self-looped, symmetrically normalized adjacency, blended with the raw
//! features and reduced by a randomized truncated SVD. The reduced rows are
//! mapped through random Fourier features of a Gaussian kernel, and spectral
//! clustering runs on that explicit map without ever forming an `n × n`
//! matrix. The convolution order can be chosen adaptively from a
//! centroid-distance-ratio score.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod selection;
pub mod spectral;

pub use config::{OrderMode, SaseConfig};
pub use error::{Result, SaseError};
pub use graph::GraphBundle;
pub use pipeline::{sase_cluster_once, ClusterResult};
pub use selection::{adaptive_select, AdaptiveTrace};
