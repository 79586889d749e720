use serde::{Deserialize, Serialize};

use crate::model::positions::{compute_positions, PositionPartition};
use crate::model::staging::{StageId, StagedTree};
use crate::model::tree::Vertex;

/// Vertex of a chain event graph: one position of the staged tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CegNode {
    pub id: usize,
    pub depth: usize,
    pub stage: usize,
    /// Ranks (at `depth`) of the tree vertices merged into this position.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CegEdge {
    pub from: usize,
    /// Target node id; equal to the sink id for edges into the leaves.
    pub to: usize,
    pub level: usize,
}

/// Chain event graph: positions as vertices plus a single sink, one edge per
/// (position, level) pair, coloured by stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Ceg {
    nodes: Vec<CegNode>,
    edges: Vec<CegEdge>,
    depth_offsets: Vec<usize>,
    variables: Vec<crate::model::VariableSpec>,
}

impl Ceg {
    pub fn from_staged_tree(st: &StagedTree) -> Ceg {
        let positions = compute_positions(st);
        Self::build(st, &positions)
    }

    fn build(st: &StagedTree, positions: &PositionPartition) -> Ceg {
        let tree = st.tree();
        let p = tree.num_variables();
        let mut depth_offsets = vec![0usize];
        for d in 0..p {
            depth_offsets.push(depth_offsets[d] + positions.depth(d).num_blocks());
        }
        let sink = depth_offsets[p];

        let mut nodes = Vec::with_capacity(sink);
        for d in 0..p {
            for (local, members) in positions.depth(d).blocks().into_iter().enumerate() {
                let stage = st.staging().stage_of(Vertex::new(d, members[0]));
                nodes.push(CegNode {
                    id: depth_offsets[d] + local,
                    depth: d,
                    stage: stage.0,
                    members,
                });
            }
        }

        let mut edges = Vec::new();
        for node in &nodes {
            let rep = Vertex::new(node.depth, node.members[0]);
            for x in 0..tree.cardinality(node.depth) {
                let child = tree.child(rep, x);
                let to = if child.depth == p {
                    sink
                } else {
                    depth_offsets[child.depth] + positions.position_of(child)
                };
                edges.push(CegEdge {
                    from: node.id,
                    to,
                    level: x,
                });
            }
        }

        Ceg {
            nodes,
            edges,
            depth_offsets,
            variables: tree.variables().to_vec(),
        }
    }

    /// Internal vertices (positions), excluding the sink.
    pub fn nodes(&self) -> &[CegNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CegEdge] {
        &self.edges
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len()
    }

    pub fn sink(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn variables(&self) -> &[crate::model::VariableSpec] {
        &self.variables
    }

    pub fn nodes_at_depth(&self, depth: usize) -> &[CegNode] {
        &self.nodes[self.depth_offsets[depth]..self.depth_offsets[depth + 1]]
    }

    pub fn stage_of(&self, node: usize) -> Option<StageId> {
        self.nodes.get(node).map(|n| StageId(n.stage))
    }

    /// Number of distinct stages among the internal vertices.
    pub fn num_colours(&self) -> usize {
        let mut stages: Vec<usize> = self.nodes.iter().map(|n| n.stage).collect();
        stages.sort_unstable();
        stages.dedup();
        stages.len()
    }
}

pub fn to_ceg(st: &StagedTree) -> Ceg {
    Ceg::from_staged_tree(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::positions::is_simple;

    #[test]
    fn eight_position_tree_coalesces_to_eight_vertices() {
        let st = fixtures::eight_positions();
        let ceg = to_ceg(&st);
        assert_eq!(ceg.num_internal(), 8);
        assert_eq!(ceg.num_vertices(), 9);
        // two CEG vertices (w1, w2) share a stage
        assert_eq!(ceg.num_colours(), 7);
        assert_eq!(ceg.stage_of(1), ceg.stage_of(2));
        assert_eq!(ceg.edges().len(), 16);
    }

    #[test]
    fn full_staging_is_isomorphic_to_tree() {
        let st = StagedTree::full(fixtures::binary_tree(2));
        let ceg = to_ceg(&st);
        assert_eq!(ceg.num_internal(), 3);
        assert_eq!(ceg.edges().len(), 6);
        let into_sink = ceg.edges().iter().filter(|e| e.to == ceg.sink()).count();
        assert_eq!(into_sink, 4);
    }

    #[test]
    fn simple_tree_has_one_vertex_per_stage() {
        for st in [fixtures::common_cause(), fixtures::context_specific(), fixtures::christchurch()] {
            assert!(is_simple(&st));
            let ceg = to_ceg(&st);
            assert_eq!(ceg.num_internal(), st.num_stages());
            assert_eq!(ceg.num_colours(), st.num_stages());
        }
    }

    #[test]
    fn edges_follow_tree_edges() {
        let st = fixtures::eight_positions();
        let ceg = to_ceg(&st);
        let tree = st.tree();
        let positions = compute_positions(&st);
        for d in 0..tree.num_variables() {
            for r in 0..tree.width(d) {
                let v = Vertex::new(d, r);
                let from = ceg.depth_offsets[d] + positions.position_of(v);
                for x in 0..tree.cardinality(d) {
                    let c = tree.child(v, x);
                    let to = if c.depth == tree.num_variables() {
                        ceg.sink()
                    } else {
                        ceg.depth_offsets[c.depth] + positions.position_of(c)
                    };
                    let hits = ceg
                        .edges()
                        .iter()
                        .filter(|e| e.from == from && e.to == to && e.level == x)
                        .count();
                    assert_eq!(hits, 1);
                }
            }
        }
    }
}
