//! Graph-convolution re-ranking for person re-identification features.
//!
//! Features are propagated over two k-nearest-neighbor graphs rebuilt at
//! every iteration, one over all rows and one restricted to other cameras,
//! with the operator `D_row^-1/2 A D_col^-1/2 X`. Tracklets are condensed
//! into one profile vector each by a per-camera ridge regression. Retrieval
//! afterwards is plain Euclidean distance.

pub mod config;
pub mod distance;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod pca;
pub mod pipeline;
pub mod propagation;
pub mod pvg;
pub mod synth;

pub use config::{GcrConfig, Variant};
pub use error::{Error, Result};
pub use eval::{evaluate, rank, EvalReport, RankedList};
pub use features::{l2_normalize, load_features, save_features, FeatureSet, RowMeta, Split};
pub use graph::{build_similarity, symmetrize, LocalGraph, SimilarityGraph};
pub use propagation::{gcr, gcr_local, gcr_sym, PropagationState};
pub use pvg::{pvg, PvgConfig, PvgMethod, ProfileSet};
pub use synth::{generate, SynthConfig};
