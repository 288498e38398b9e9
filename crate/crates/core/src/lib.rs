//! Gradual machine learning (GML) for transductive N-way K-shot classification.
//!
//! Samples are embedded by one or more frozen backbones. Each sample becomes a
//! variable in a factor graph with unary class-centroid-distance (CCD) factors
//! and binary k-nearest-neighbor (KNN) factors. Query samples are then labeled
//! a batch at a time in increasing order of hardness: candidates are screened by
//! Dempster-Shafer evidential support, ranked by approximate entropy, and
//! finally resolved by exact inference over a per-variable subgraph. Every newly
//! labeled sample becomes evidence for the next round.
//!
//! The crate is organized around that pipeline:
//!
//! - [`episode`]: bundle format, validation, synthetic generation, reports.
//! - [`features`]: normalization, class centroids, CCD values, KNN graphs.
//! - [`influence`]: sigmoid influence models, fitting, confidence, weights.
//! - [`evidence`]: mass functions and Dempster combination.
//! - [`graph`]: factor graph, subgraphs, marginals and a brute-force oracle.
//! - [`inference`]: the gradual inference driver and its trace.
//! - [`baseline`] and [`eval`]: nearest-centroid baseline and episode harness.

pub mod baseline;
pub mod episode;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod features;
pub mod graph;
pub mod inference;
pub mod influence;
pub mod matrix;

pub use episode::{
    generate_synthetic, load_episode, load_report, save_report, write_bundle, Episode,
    EpisodeManifest, PredictionReport, SynthParams,
};
pub use error::{GmlError, Result};
pub use inference::{gradual_inference, InferenceConfig, InferenceTrace};
pub use matrix::Matrix;
