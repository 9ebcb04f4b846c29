//! Pipeline for classifying influential ("key") nodes in complex networks.
//!
//! Ground truth comes from Monte Carlo Independent Cascade runs started at
//! every node. The continuous influence statistics are discretized into
//! classes (clustering-based "Smart Bins" or baselines), nodes are embedded by
//! fourteen centralities plus the activation probability, and classifiers are
//! trained and scored with F1-macro, within and across networks. Shapley
//! values explain the trained models.

pub mod centrality;
pub mod diffusion;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod graph;
pub mod importance;
pub mod labeling;
pub mod models;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
