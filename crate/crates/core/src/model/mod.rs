//! Event trees, staged trees, positions and chain event graphs.

mod ceg;
mod positions;
mod staging;
mod tree;

pub use ceg::{to_ceg, Ceg, CegEdge, CegNode};
pub use positions::{compute_positions, is_simple, simplify, subtree_equal, PositionPartition};
pub use staging::{
    DepthPartition, SimplexMode, StageId, StageParameters, StagedTree, Staging,
    SIMPLEX_TOLERANCE,
};
pub use tree::{EventTree, VariableSpec, Vertex};

pub fn build_event_tree(variables: Vec<VariableSpec>) -> crate::Result<EventTree> {
    EventTree::new(variables)
}

pub fn full_staging(tree: EventTree) -> StagedTree {
    StagedTree::full(tree)
}
