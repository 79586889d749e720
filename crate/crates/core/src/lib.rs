//! Staged trees and chain event graphs for categorical data.
//!
//! The crate covers the whole pipeline: building X-compatible staged trees,
//! computing positions and chain event graphs, scoring with BIC, learning
//! general and *simple* staged trees (stages equal positions), converting
//! Bayesian networks, and the simulation harness used to study consistency.

pub mod bn;
pub mod data;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod learn;
pub mod model;
pub mod scoring;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    compute_positions, is_simple, simplify, subtree_equal, to_ceg, Ceg, DepthPartition,
    EventTree, PositionPartition, SimplexMode, StageId, StageParameters, StagedTree, Staging,
    VariableSpec, Vertex,
};
pub use bn::Dag;
pub use data::Dataset;
pub use learn::{learn, Algorithm, Fitted, LearnConfig};
pub use scoring::{count_paths, CountTree};
