//! Learners for a fixed variable order.

use crate::error::Result;
use crate::learn::climb::{groups_of, hill_climb, partition_of, Group, IMPROVEMENT_EPS};
use crate::learn::{closure_propagate, Fitted};
use crate::model::{simplify, DepthPartition, StagedTree, Staging};
use crate::scoring::{add_into, ln_n, multinomial_ll, score, CountTree};

fn finish(counts: &CountTree, depths: Vec<DepthPartition>, bic: f64) -> Fitted {
    let tree = counts.tree().clone();
    let staging = Staging::new(&tree, depths).expect("learned staging covers the tree");
    Fitted {
        model: StagedTree::new(tree, staging).expect("valid staging"),
        order: counts.order().to_vec(),
        bic,
    }
}

/// BIC of the full staging, the starting point of every learner.
fn full_bic(counts: &CountTree) -> Result<f64> {
    let full = StagedTree::full(counts.tree().clone());
    Ok(score(&full, counts)?.bic)
}

/// Backward hill-climbing: every depth independently, starting from
/// singleton stages.
pub fn learn_bhc(counts: &CountTree) -> Result<Fitted> {
    let ln_n = ln_n(counts)?;
    let tree = counts.tree();
    let mut bic = full_bic(counts)?;
    let mut depths = Vec::with_capacity(tree.num_variables());
    for d in 0..tree.num_variables() {
        let k = tree.cardinality(d);
        let start = groups_of(&DepthPartition::singletons(tree.width(d)), counts.depth_counts(d), k);
        let (groups, delta) = hill_climb(start, k, ln_n);
        bic += delta;
        depths.push(partition_of(&groups, tree.width(d)));
    }
    Ok(finish(counts, depths, bic))
}

/// Backward hill-climbing followed by simplification.
pub fn learn_simplified_bhc(counts: &CountTree) -> Result<Fitted> {
    let bhc = learn_bhc(counts)?;
    let model = simplify(&bhc.model);
    let bic = score(&model, counts)?.bic;
    Ok(Fitted {
        model,
        order: bhc.order,
        bic,
    })
}

/// Depth-by-depth stage merging scored on each depth's own BIC
/// contribution; after each depth the stages are closed downwards so the
/// result is simple.
pub fn learn_marginal(counts: &CountTree) -> Result<Fitted> {
    let ln_n = ln_n(counts)?;
    let tree = counts.tree();
    let mut bic = full_bic(counts)?;
    let mut depths: Vec<DepthPartition> = Vec::with_capacity(tree.num_variables());
    for d in 0..tree.num_variables() {
        let start_part = match depths.last() {
            None => DepthPartition::singletons(1),
            Some(prev) => closure_propagate(tree, d - 1, prev),
        };
        let (part, delta) = marginal_depth(counts, d, &start_part, ln_n);
        bic += delta;
        depths.push(part);
    }
    Ok(finish(counts, depths, bic))
}

/// Optimizes one depth of the marginal learner from closure-forced groups.
/// The returned delta is relative to the full staging at that depth.
pub(crate) fn marginal_depth(
    counts: &CountTree,
    depth: usize,
    forced: &DepthPartition,
    ln_n: f64,
) -> (DepthPartition, f64) {
    let tree = counts.tree();
    let k = tree.cardinality(depth);
    let flat = counts.depth_counts(depth);
    let start = groups_of(forced, flat, k);
    // closure itself already merged vertices; account for it against the
    // singleton baseline
    let singleton_ll: f64 = (0..tree.width(depth))
        .map(|r| multinomial_ll(&flat[r * k..r * k + k]))
        .sum();
    let forced_ll: f64 = start.iter().map(Group::ll).sum();
    let forced_delta = -((tree.width(depth) - start.len()) as f64) * (k - 1) as f64 * ln_n
        - 2.0 * (forced_ll - singleton_ll);
    let (groups, delta) = hill_climb(start, k, ln_n);
    (partition_of(&groups, tree.width(depth)), forced_delta + delta)
}

/// Per-depth group bookkeeping for the total learner. Group index equals
/// its smallest member rank, so indices double as tie-break keys.
struct DepthState {
    k: usize,
    group_of: Vec<usize>,
    groups: Vec<Group>,
    alive: Vec<bool>,
}

impl DepthState {
    fn singletons(flat: &[u64], k: usize, width: usize) -> Self {
        DepthState {
            k,
            group_of: (0..width).collect(),
            groups: (0..width)
                .map(|r| Group {
                    id: r,
                    members: vec![r],
                    counts: flat[r * k..r * k + k].to_vec(),
                })
                .collect(),
            alive: vec![true; width],
        }
    }

    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.groups.len()).filter(|&g| self.alive[g])
    }
}

/// A cascade of merges: for each affected depth, the components (lists of
/// group indices, ascending) that become one group.
struct Cascade {
    start_depth: usize,
    components: Vec<Vec<Vec<usize>>>,
    delta: f64,
}

struct TotalSearch<'a> {
    counts: &'a CountTree,
    ln_n: f64,
    depths: Vec<DepthState>,
}

impl<'a> TotalSearch<'a> {
    fn new(counts: &'a CountTree) -> Result<Self> {
        let ln_n = ln_n(counts)?;
        let tree = counts.tree();
        let depths = (0..tree.num_variables())
            .map(|d| DepthState::singletons(counts.depth_counts(d), tree.cardinality(d), tree.width(d)))
            .collect();
        Ok(TotalSearch { counts, ln_n, depths })
    }

    /// Merging groups `a` and `b` at `depth`, plus every child merge it
    /// forces, and the resulting change in the full-model BIC.
    fn cascade(&self, depth: usize, a: usize, b: usize) -> Cascade {
        let tree = self.counts.tree();
        let p = tree.num_variables();
        let mut pairs = vec![(a, b)];
        let mut components = Vec::new();
        let mut delta = 0.0;
        for d in depth..p {
            if pairs.is_empty() {
                break;
            }
            let state = &self.depths[d];
            let comps = components_of(&pairs);
            let k = state.k;
            for comp in &comps {
                let mut merged = vec![0u64; k];
                let mut parts_ll = 0.0;
                for &g in comp {
                    add_into(&mut merged, &state.groups[g].counts);
                    parts_ll += state.groups[g].ll();
                }
                delta += -((comp.len() - 1) as f64) * (k - 1) as f64 * self.ln_n
                    - 2.0 * (multinomial_ll(&merged) - parts_ll);
            }
            pairs.clear();
            if d + 1 < p {
                let below = &self.depths[d + 1];
                for comp in &comps {
                    let rep0 = state.groups[comp[0]].id;
                    for &g in &comp[1..] {
                        let rep = state.groups[g].id;
                        for x in 0..k {
                            let c0 = below.group_of[rep0 * k + x];
                            let c1 = below.group_of[rep * k + x];
                            if c0 != c1 {
                                pairs.push((c0, c1));
                            }
                        }
                    }
                }
            }
            components.push(comps);
        }
        Cascade {
            start_depth: depth,
            components,
            delta,
        }
    }

    fn apply(&mut self, cascade: Cascade) {
        for (offset, comps) in cascade.components.into_iter().enumerate() {
            let state = &mut self.depths[cascade.start_depth + offset];
            for comp in comps {
                let keep = comp[0];
                for &g in &comp[1..] {
                    let absorbed = std::mem::take(&mut state.groups[g]);
                    state.alive[g] = false;
                    for &r in &absorbed.members {
                        state.group_of[r] = keep;
                    }
                    add_into(&mut state.groups[keep].counts, &absorbed.counts);
                    state.groups[keep].members.extend(absorbed.members);
                }
                state.groups[keep].members.sort_unstable();
            }
        }
    }

    fn climb_depth(&mut self, depth: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let live: Vec<usize> = self.depths[depth].live().collect();
            let mut best: Option<(usize, usize, f64)> = None;
            for (i, &a) in live.iter().enumerate() {
                for &b in &live[i + 1..] {
                    let delta = self.cascade(depth, a, b).delta;
                    if best.is_none_or(|(_, _, d)| delta < d) {
                        best = Some((a, b, delta));
                    }
                }
            }
            match best {
                Some((a, b, delta)) if delta < -IMPROVEMENT_EPS => {
                    let cascade = self.cascade(depth, a, b);
                    total += cascade.delta;
                    self.apply(cascade);
                }
                _ => break,
            }
        }
        total
    }

    fn partitions(&self) -> Vec<DepthPartition> {
        self.depths
            .iter()
            .map(|s| DepthPartition::from_labels(s.group_of.iter().copied()))
            .collect()
    }
}

/// Connected components of a set of index pairs, each sorted ascending and
/// listed by smallest element.
fn components_of(pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut nodes: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let index = |x: usize| nodes.binary_search(&x).unwrap();
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(nodes.len());
    for &(a, b) in pairs {
        uf.union(index(a), index(b));
    }
    let labels = uf.into_labeling();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut slot = std::collections::HashMap::new();
    for (i, &root) in labels.iter().enumerate() {
        let at = *slot.entry(root).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        comps[at].push(nodes[i]);
    }
    comps.retain(|c| c.len() > 1);
    comps
}

/// Depth-by-depth merging of positions scored on the full-model BIC. A
/// merge at one depth recursively merges the level-matched children, so
/// every intermediate state is simple.
pub fn learn_total(counts: &CountTree) -> Result<Fitted> {
    let mut bic = full_bic(counts)?;
    let mut search = TotalSearch::new(counts)?;
    for d in 0..counts.tree().num_variables() {
        bic += search.climb_depth(d);
    }
    Ok(finish(counts, search.partitions(), bic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::model::{is_simple, VariableSpec};
    use crate::scoring::{bic, count_paths};

    fn data(rows: &[(Vec<usize>, usize)], p: usize) -> Dataset {
        let vars = (1..=p).map(|i| VariableSpec::binary(format!("X{i}"))).collect();
        let mut all = Vec::new();
        for (row, times) in rows {
            for _ in 0..*times {
                all.push(row.clone());
            }
        }
        Dataset::new(vars, &all).unwrap()
    }

    #[test]
    fn components() {
        assert_eq!(
            components_of(&[(3, 1), (5, 7), (1, 9)]),
            vec![vec![1, 3, 9], vec![5, 7]]
        );
        assert!(components_of(&[]).is_empty());
    }

    #[test]
    fn bhc_single_row_keeps_full_staging() {
        // with one observation every staging scores BIC 0, so no move improves
        let d = data(&[(vec![0, 1, 0], 1)], 3);
        let c = count_paths(&d, &[0, 1, 2]).unwrap();
        let fit = learn_bhc(&c).unwrap();
        assert_eq!(fit.model.num_stages(), 7);
        assert_eq!(fit.bic, 0.0);
    }

    #[test]
    fn bhc_repeated_row_collapses_maximally() {
        let d = data(&[(vec![0, 1, 0], 2)], 3);
        let c = count_paths(&d, &[0, 1, 2]).unwrap();
        let fit = learn_bhc(&c).unwrap();
        assert_eq!(fit.model.staging().stages_per_depth(), vec![1, 1, 1]);
        assert!((fit.bic - bic(&fit.model, &c).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn p1_learners_agree() {
        let d = data(&[(vec![0], 30), (vec![1], 10)], 1);
        let c = count_paths(&d, &[0]).unwrap();
        let a = learn_bhc(&c).unwrap();
        let b = learn_marginal(&c).unwrap();
        let t = learn_total(&c).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.model, t.model);
    }

    #[test]
    fn marginal_and_total_are_simple_and_audited() {
        let d = data(
            &[
                (vec![0, 0, 0], 40),
                (vec![0, 0, 1], 10),
                (vec![0, 1, 0], 35),
                (vec![0, 1, 1], 15),
                (vec![1, 0, 0], 5),
                (vec![1, 0, 1], 45),
                (vec![1, 1, 0], 10),
                (vec![1, 1, 1], 40),
            ],
            3,
        );
        let c = count_paths(&d, &[0, 1, 2]).unwrap();
        for fit in [learn_marginal(&c).unwrap(), learn_total(&c).unwrap()] {
            assert!(is_simple(&fit.model));
            assert!((fit.bic - bic(&fit.model, &c).unwrap()).abs() < 1e-9);
        }
        let s = learn_simplified_bhc(&c).unwrap();
        assert!(is_simple(&s.model));
    }
}
