//! Agglomerative stage merging within one depth, and the closure that makes
//! same-stage vertices have same-stage children.

use petgraph::unionfind::UnionFind;

use crate::model::{DepthPartition, EventTree};
use crate::scoring::{add_into, merge_delta, multinomial_ll};

/// Moves must lower the score by more than this to be accepted.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-9;

/// Above this many groups the pairwise delta cache is not kept in memory.
const DELTA_CACHE_LIMIT: usize = 2048;

#[derive(Clone, Debug)]
pub(crate) struct Group {
    /// Smallest member rank; doubles as the group's tie-break key.
    pub id: usize,
    pub members: Vec<usize>,
    pub counts: Vec<u64>,
}

impl Group {
    pub fn ll(&self) -> f64 {
        multinomial_ll(&self.counts)
    }
}

/// Groups of a depth partition with pooled counts, ordered by id.
pub(crate) fn groups_of(part: &DepthPartition, flat: &[u64], k: usize) -> Vec<Group> {
    let mut groups: Vec<Group> = part
        .blocks()
        .into_iter()
        .map(|members| {
            let mut counts = vec![0u64; k];
            for &r in &members {
                add_into(&mut counts, &flat[r * k..r * k + k]);
            }
            Group {
                id: members[0],
                members,
                counts,
            }
        })
        .collect();
    groups.sort_by_key(|g| g.id);
    groups
}

pub(crate) fn partition_of(groups: &[Group], width: usize) -> DepthPartition {
    let mut owner = vec![0usize; width];
    for g in groups {
        for &r in &g.members {
            owner[r] = g.id;
        }
    }
    DepthPartition::from_labels(owner)
}

/// Steepest-descent merging of groups under the depth-local BIC. Ties go to
/// the lexicographically smallest `(id, id)` pair. Returns the surviving
/// groups (ordered by id) and the accumulated BIC change.
pub(crate) fn hill_climb(mut groups: Vec<Group>, k: usize, ln_n: f64) -> (Vec<Group>, f64) {
    groups.sort_by_key(|g| g.id);
    let g = groups.len();
    let mut alive = vec![true; g];
    let cached = g <= DELTA_CACHE_LIMIT;
    let mut cache = if cached { vec![0.0f64; g * g] } else { Vec::new() };
    if cached {
        for i in 0..g {
            for j in i + 1..g {
                cache[i * g + j] = merge_delta(&groups[i].counts, &groups[j].counts, k, ln_n);
            }
        }
    }
    let mut total = 0.0;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..g {
            if !alive[i] {
                continue;
            }
            for j in i + 1..g {
                if !alive[j] {
                    continue;
                }
                let delta = if cached {
                    cache[i * g + j]
                } else {
                    merge_delta(&groups[i].counts, &groups[j].counts, k, ln_n)
                };
                if best.is_none_or(|(_, _, b)| delta < b) {
                    best = Some((i, j, delta));
                }
            }
        }
        let Some((i, j, delta)) = best else { break };
        if delta >= -IMPROVEMENT_EPS {
            break;
        }
        total += delta;
        let absorbed = std::mem::take(&mut groups[j]);
        alive[j] = false;
        add_into(&mut groups[i].counts, &absorbed.counts);
        groups[i].members.extend(absorbed.members);
        if cached {
            for o in 0..g {
                if o == i || !alive[o] {
                    continue;
                }
                let (lo, hi) = if o < i { (o, i) } else { (i, o) };
                cache[lo * g + hi] = merge_delta(&groups[lo].counts, &groups[hi].counts, k, ln_n);
            }
        }
    }
    let mut out: Vec<Group> = groups
        .into_iter()
        .zip(alive)
        .filter_map(|(mut grp, a)| {
            a.then(|| {
                grp.members.sort_unstable();
                grp
            })
        })
        .collect();
    out.sort_by_key(|g| g.id);
    (out, total)
}

impl Default for Group {
    fn default() -> Self {
        Group {
            id: usize::MAX,
            members: Vec::new(),
            counts: Vec::new(),
        }
    }
}

/// Finest partition of depth `depth + 1` in which, for every stage at
/// `depth`, the children reached by the same level share a block.
pub fn closure_propagate(tree: &EventTree, depth: usize, stages: &DepthPartition) -> DepthPartition {
    let width = tree.width(depth + 1);
    let k = tree.cardinality(depth);
    let mut uf = UnionFind::<usize>::new(width);
    for block in stages.blocks() {
        let first = block[0];
        for &other in &block[1..] {
            for x in 0..k {
                uf.union(first * k + x, other * k + x);
            }
        }
    }
    DepthPartition::from_labels(uf.into_labeling())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn closure_matches_children_by_level() {
        let t = fixtures::binary_tree(3);
        let part = DepthPartition::from_labels([0, 0]);
        let closed = closure_propagate(&t, 1, &part);
        assert_eq!(closed.blocks(), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn closure_of_singletons_is_singletons() {
        let t = fixtures::binary_tree(3);
        let closed = closure_propagate(&t, 1, &DepthPartition::singletons(2));
        assert_eq!(closed, DepthPartition::singletons(4));
    }

    #[test]
    fn closure_christchurch() {
        // background low/avg share a stage: admission contexts pair up
        let st = fixtures::christchurch();
        let closed = closure_propagate(st.tree(), 1, st.staging().depth(1));
        assert_eq!(
            closed.blocks(),
            vec![vec![0, 3], vec![1, 4], vec![2, 5], vec![6], vec![7], vec![8]]
        );
    }

    #[test]
    fn hill_climb_merges_identical_and_keeps_distinct() {
        let ln_n = (400f64).ln();
        let groups = vec![
            Group { id: 0, members: vec![0], counts: vec![50, 50] },
            Group { id: 1, members: vec![1], counts: vec![50, 50] },
            Group { id: 2, members: vec![2], counts: vec![95, 5] },
            Group { id: 3, members: vec![3], counts: vec![5, 95] },
        ];
        let (out, total) = hill_climb(groups, 2, ln_n);
        let members: Vec<Vec<usize>> = out.iter().map(|g| g.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1], vec![2], vec![3]]);
        assert!((total + ln_n).abs() < 1e-12);
    }

    #[test]
    fn hill_climb_tie_break_is_lexicographic() {
        let ln_n = (10f64).ln();
        let groups = (0..3)
            .map(|i| Group { id: i, members: vec![i], counts: vec![0, 0] })
            .collect();
        // all merges tie; (0,1) goes first, then the result absorbs 2
        let (out, _) = hill_climb(groups, 2, ln_n);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].members, vec![0, 1, 2]);
    }
}
