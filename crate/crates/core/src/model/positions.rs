//! Positions of a staged tree and the simplicity predicate.
//!
//! Two same-depth vertices share a position when their coloured subtrees are
//! identical. Positions are computed bottom-up: a vertex's key is its stage
//! plus the positions of its children in level order, and equal keys are
//! interned to the same position.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::staging::{DepthPartition, StagedTree, Staging};
use crate::model::tree::Vertex;

/// Per-depth partition of internal vertices into positions. Always refines
/// the staging it was computed from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionPartition {
    depths: Vec<DepthPartition>,
}

impl PositionPartition {
    pub fn depth(&self, d: usize) -> &DepthPartition {
        &self.depths[d]
    }

    pub fn depths(&self) -> &[DepthPartition] {
        &self.depths
    }

    pub fn num_positions(&self) -> usize {
        self.depths.iter().map(|p| p.num_blocks()).sum()
    }

    pub fn positions_per_depth(&self) -> Vec<usize> {
        self.depths.iter().map(|p| p.num_blocks()).collect()
    }

    pub fn position_of(&self, v: Vertex) -> usize {
        self.depths[v.depth].label(v.rank)
    }

    pub fn into_staging(self) -> Staging {
        Staging::from_parts(self.depths)
    }
}

pub fn compute_positions(st: &StagedTree) -> PositionPartition {
    let tree = st.tree();
    let staging = st.staging();
    let p = tree.num_variables();
    let mut depths: Vec<DepthPartition> = Vec::with_capacity(p);

    // children of the deepest internal vertices are leaves, which all share
    // the sink position, so positions there coincide with stages
    depths.push(staging.depth(p - 1).clone());
    for d in (0..p - 1).rev() {
        let below = depths.last().unwrap();
        let stages = staging.depth(d);
        let k = tree.cardinality(d);
        let mut interned: HashMap<(u32, &[u32]), u32> = HashMap::new();
        let below_labels = below.labels();
        let keys = (0..tree.width(d)).map(|r| {
            let key = (stages.labels()[r], &below_labels[r * k..r * k + k]);
            let next = interned.len() as u32;
            *interned.entry(key).or_insert(next)
        });
        let part = DepthPartition::from_labels(keys.collect::<Vec<_>>());
        depths.push(part);
    }
    depths.reverse();
    PositionPartition { depths }
}

/// Structural comparison of the coloured subtrees rooted at `v` and `w`,
/// without any hashing. Quadratic in the subtree size; intended as a
/// reference for [`compute_positions`].
pub fn subtree_equal(st: &StagedTree, v: Vertex, w: Vertex) -> Result<bool> {
    if v.depth != w.depth {
        return Err(Error::DepthMismatch(v.depth, w.depth));
    }
    let tree = st.tree();
    if !tree.contains(v) {
        return Err(Error::VertexOutOfRange {
            depth: v.depth,
            rank: v.rank,
        });
    }
    if !tree.contains(w) {
        return Err(Error::VertexOutOfRange {
            depth: w.depth,
            rank: w.rank,
        });
    }
    Ok(subtree_equal_rec(st, v, w))
}

fn subtree_equal_rec(st: &StagedTree, v: Vertex, w: Vertex) -> bool {
    let tree = st.tree();
    if v.depth == tree.num_variables() {
        return true;
    }
    if st.staging().stage_of(v) != st.staging().stage_of(w) {
        return false;
    }
    (0..tree.cardinality(v.depth))
        .all(|x| subtree_equal_rec(st, tree.child(v, x), tree.child(w, x)))
}

/// A staged tree is simple when its stages and positions coincide.
pub fn is_simple(st: &StagedTree) -> bool {
    let positions = compute_positions(st);
    positions
        .depths()
        .iter()
        .zip(st.staging().depths())
        .all(|(pos, stage)| pos == stage)
}

/// Replaces the staging by the position partition. The result is simple and
/// carries no parameters.
pub fn simplify(st: &StagedTree) -> StagedTree {
    let staging = compute_positions(st).into_staging();
    StagedTree::new(st.tree().clone(), staging).expect("positions cover the same tree")
}
