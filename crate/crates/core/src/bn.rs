//! Bayesian networks: DAGs, simplicity and decomposability, DAG
//! simplification, the embedding of a network into a staged tree, and a
//! hill-climbing baseline learner.
//!
//! Vertex `i` of a [`Dag`] corresponds to column `i` of a dataset.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::ops::ControlFlow;

use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;

use crate::data::{check_permutation, Dataset};
use crate::error::{Error, Result};
use crate::model::{DepthPartition, EventTree, StagedTree, Staging, VariableSpec, Vertex};
use crate::scoring::multinomial_ll;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<BTreeSet<usize>>,
}

impl Dag {
    pub fn new(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let p = names.len();
        let mut parents = vec![BTreeSet::new(); p];
        for &(from, to) in edges {
            if from >= p || to >= p {
                return Err(Error::InvalidGraph(format!(
                    "edge ({from}, {to}) references a missing vertex"
                )));
            }
            if from == to {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {from}")));
            }
            parents[to].insert(from);
        }
        let dag = Dag { names, parents };
        if !dag.is_acyclic() {
            return Err(Error::Cyclic);
        }
        Ok(dag)
    }

    pub fn empty(names: Vec<String>) -> Self {
        let p = names.len();
        Dag {
            names,
            parents: vec![BTreeSet::new(); p],
        }
    }

    /// Complete DAG following the vertex labels: `i -> j` for all `i < j`.
    pub fn saturated(names: Vec<String>) -> Self {
        let p = names.len();
        Dag {
            names,
            parents: (0..p).map(|j| (0..j).collect()).collect(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parents(&self, v: usize) -> &BTreeSet<usize> {
        &self.parents[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(&from)
    }

    /// Edges sorted by (from, to).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(to, ps)| ps.iter().map(move |&from| (from, to)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn num_edges(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.names.len()).map(|_| g.add_node(())).collect();
        for (from, to) in self.edges() {
            g.add_edge(nodes[from], nodes[to], ());
        }
        !is_cyclic_directed(&g)
    }

    fn with_edge_toggled(&self, from: usize, to: usize, present: bool) -> Dag {
        let mut out = self.clone();
        if present {
            out.parents[to].insert(from);
        } else {
            out.parents[to].remove(&from);
        }
        out
    }
}

pub fn is_topological(g: &Dag, order: &[usize]) -> bool {
    if check_permutation(order, g.num_vertices()).is_err() {
        return false;
    }
    let mut position = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    g.edges()
        .into_iter()
        .all(|(from, to)| position[from] < position[to])
}

fn require_topological(g: &Dag, order: &[usize]) -> Result<()> {
    if check_permutation(order, g.num_vertices()).is_err() {
        return Err(Error::InvalidOrder(format!(
            "{order:?} is not a permutation of the {} vertices",
            g.num_vertices()
        )));
    }
    if !is_topological(g, order) {
        return Err(Error::NotTopological);
    }
    Ok(())
}

/// Visits every linear extension in lexicographic order until `visit`
/// breaks. `prune(prefix, next)` may reject extending a prefix by `next`.
fn walk_orders<F, P>(g: &Dag, prune: &P, visit: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
    P: Fn(&[usize], usize) -> bool,
{
    fn rec<F, P>(
        g: &Dag,
        prefix: &mut Vec<usize>,
        placed: &mut [bool],
        prune: &P,
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
        P: Fn(&[usize], usize) -> bool,
    {
        let p = g.num_vertices();
        if prefix.len() == p {
            return visit(prefix);
        }
        for v in 0..p {
            if placed[v] || !g.parents[v].iter().all(|&u| placed[u]) || !prune(prefix, v) {
                continue;
            }
            placed[v] = true;
            prefix.push(v);
            let flow = rec(g, prefix, placed, prune, visit);
            prefix.pop();
            placed[v] = false;
            flow?;
        }
        ControlFlow::Continue(())
    }
    let mut placed = vec![false; g.num_vertices()];
    rec(g, &mut Vec::new(), &mut placed, prune, visit)
}

/// All topological orders, lexicographically.
pub fn topological_orders(g: &Dag) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let _ = walk_orders(g, &|_, _| true, &mut |o| {
        out.push(o.to_vec());
        ControlFlow::Continue(())
    });
    out
}

/// Topological order that always places the smallest available vertex next.
pub fn smallest_label_order(g: &Dag) -> Vec<usize> {
    let p = g.num_vertices();
    let mut indegree: Vec<usize> = g.parents.iter().map(|s| s.len()).collect();
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..p).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for w in 0..p {
            if g.parents[w].contains(&v) {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    heap.push(Reverse(w));
                }
            }
        }
    }
    order
}

fn chain_step_ok(g: &Dag, prev: usize, next: usize) -> bool {
    g.parents[next]
        .iter()
        .all(|&u| u == prev || g.parents[prev].contains(&u))
}

/// Whether each vertex's parents are contained in its predecessor's parents
/// plus the predecessor itself, along `order`.
pub fn is_simple_dag_wrt(g: &Dag, order: &[usize]) -> Result<bool> {
    require_topological(g, order)?;
    Ok(order.windows(2).all(|w| chain_step_ok(g, w[0], w[1])))
}

/// Whether some topological order makes the DAG simple.
pub fn is_simple_dag(g: &Dag) -> bool {
    let prune = |prefix: &[usize], next: usize| match prefix.last() {
        Some(&prev) => chain_step_ok(g, prev, next),
        None => true,
    };
    walk_orders(g, &prune, &mut |_| ControlFlow::Break(())).is_break()
}

/// Every vertex with parents has a parent `j` with `Pa(v) ⊆ Pa(j) ∪ {j}`.
/// Vertices without parents pass. Every simple DAG satisfies this.
pub fn is_decomposable(g: &Dag) -> bool {
    (0..g.num_vertices()).all(|v| {
        let ps = &g.parents[v];
        ps.is_empty()
            || ps
                .iter()
                .any(|&j| ps.iter().all(|&u| u == j || g.parents[j].contains(&u)))
    })
}

/// The stricter reading `Pa(v) = Pa(j) ∪ {j}` for some parent `j`. Fails on
/// the chain `1 -> 2 -> 3`, which is simple.
pub fn is_decomposable_strict(g: &Dag) -> bool {
    (0..g.num_vertices()).all(|v| {
        let ps = &g.parents[v];
        ps.is_empty()
            || ps.iter().any(|&j| {
                g.parents[j].len() + 1 == ps.len() && g.parents[j].iter().all(|u| ps.contains(u))
            })
    })
}

/// Adds the fewest edges making the DAG simple with respect to `order`,
/// sweeping from the last vertex backwards.
pub fn simplify_dag(g: &Dag, order: &[usize]) -> Result<Dag> {
    require_topological(g, order)?;
    let mut out = g.clone();
    for i in (1..order.len()).rev() {
        let (prev, cur) = (order[i - 1], order[i]);
        let missing: Vec<usize> = out.parents[cur]
            .iter()
            .copied()
            .filter(|&u| u != prev && !out.parents[prev].contains(&u))
            .collect();
        out.parents[prev].extend(missing);
    }
    Ok(out)
}

/// Staged tree of a network under a topological order: at each depth the
/// vertices are staged by the values of the next variable's parents.
pub fn bn_to_staged_tree(g: &Dag, variables: &[VariableSpec], order: &[usize]) -> Result<StagedTree> {
    if variables.len() != g.num_vertices() {
        return Err(Error::InvalidGraph(format!(
            "{} variables for {} vertices",
            variables.len(),
            g.num_vertices()
        )));
    }
    require_topological(g, order)?;
    let tree = EventTree::new(order.iter().map(|&v| variables[v].clone()).collect())?;
    let mut position = vec![0; order.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let depths = (0..order.len())
        .map(|d| {
            let parent_depths: Vec<usize> =
                g.parents[order[d]].iter().map(|&u| position[u]).collect();
            DepthPartition::from_labels((0..tree.width(d)).map(|r| {
                let prefix = tree.prefix(Vertex::new(d, r));
                parent_depths.iter().map(|&pd| prefix[pd]).collect::<Vec<_>>()
            }))
        })
        .collect();
    let staging = Staging::new(&tree, depths)?;
    StagedTree::new(tree, staging)
}

fn family_counts(data: &Dataset, child: usize, parents: &BTreeSet<usize>) -> HashMap<Vec<u32>, Vec<u64>> {
    let k = data.variables()[child].cardinality();
    let mut table: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
    for row in data.rows() {
        let key: Vec<u32> = parents.iter().map(|&u| row[u]).collect();
        table.entry(key).or_insert_with(|| vec![0; k])[row[child] as usize] += 1;
    }
    table
}

fn family_ll(data: &Dataset, child: usize, parents: &BTreeSet<usize>) -> f64 {
    // sort configurations so the float sum does not depend on hash order
    let mut entries: Vec<_> = family_counts(data, child, parents).into_iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    entries.iter().map(|(_, c)| multinomial_ll(c)).sum()
}

fn family_params(data: &Dataset, child: usize, parents: &BTreeSet<usize>) -> f64 {
    let vars = data.variables();
    let configs: f64 = parents.iter().map(|&u| vars[u].cardinality() as f64).product();
    (vars[child].cardinality() - 1) as f64 * configs
}

fn check_data(g: &Dag, data: &Dataset) -> Result<()> {
    if g.num_vertices() != data.n_vars() {
        return Err(Error::InvalidGraph(format!(
            "graph has {} vertices, data has {} variables",
            g.num_vertices(),
            data.n_vars()
        )));
    }
    Ok(())
}

/// Log-likelihood of the network factorization at the MLE.
pub fn bn_log_likelihood(g: &Dag, data: &Dataset) -> Result<f64> {
    check_data(g, data)?;
    Ok((0..g.num_vertices())
        .map(|v| family_ll(data, v, &g.parents[v]))
        .sum())
}

pub fn bn_bic(g: &Dag, data: &Dataset) -> Result<f64> {
    check_data(g, data)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let ln_n = (data.n_rows() as f64).ln();
    Ok((0..g.num_vertices())
        .map(|v| family_params(data, v, &g.parents[v]) * ln_n - 2.0 * family_ll(data, v, &g.parents[v]))
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnFit {
    pub dag: Dag,
    /// Smallest-label-first topological order of `dag`.
    pub order: Vec<usize>,
    pub bic: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum MoveKind {
    Add,
    Delete,
    Reverse,
}

/// Greedy hill-climbing over single-edge additions, deletions and
/// reversals from the empty graph, scored by BIC. Ties go to the move that
/// sorts first by (kind, from, to).
pub fn learn_bn_hc(data: &Dataset) -> Result<BnFit> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let p = data.n_vars();
    let names = data.variables().iter().map(|v| v.name.clone()).collect();
    let ln_n = (data.n_rows() as f64).ln();
    let mut cache: HashMap<(usize, BTreeSet<usize>), f64> = HashMap::new();
    let mut family = |v: usize, ps: &BTreeSet<usize>| -> f64 {
        *cache
            .entry((v, ps.clone()))
            .or_insert_with(|| family_params(data, v, ps) * ln_n - 2.0 * family_ll(data, v, ps))
    };

    let mut dag = Dag::empty(names);
    let mut scores: Vec<f64> = (0..p).map(|v| family(v, &dag.parents[v])).collect();
    loop {
        let mut best: Option<((MoveKind, usize, usize), f64)> = None;
        let mut consider = |key: (MoveKind, usize, usize), delta: f64| {
            let better = match best {
                None => true,
                Some((bk, bd)) => delta < bd || (delta == bd && key < bk),
            };
            if better {
                best = Some((key, delta));
            }
        };
        for from in 0..p {
            for to in 0..p {
                if from == to {
                    continue;
                }
                if dag.has_edge(from, to) {
                    let mut without = dag.parents[to].clone();
                    without.remove(&from);
                    let d_delete = family(to, &without) - scores[to];
                    consider((MoveKind::Delete, from, to), d_delete);

                    let reversed = dag.with_edge_toggled(from, to, false).with_edge_toggled(to, from, true);
                    if reversed.is_acyclic() {
                        let d = d_delete + family(from, &reversed.parents[from]) - scores[from];
                        consider((MoveKind::Reverse, from, to), d);
                    }
                } else if !dag.has_edge(to, from) {
                    let added = dag.with_edge_toggled(from, to, true);
                    if added.is_acyclic() {
                        let d = family(to, &added.parents[to]) - scores[to];
                        consider((MoveKind::Add, from, to), d);
                    }
                }
            }
        }
        match best {
            Some(((kind, from, to), delta)) if delta < -1e-9 => {
                dag = match kind {
                    MoveKind::Add => dag.with_edge_toggled(from, to, true),
                    MoveKind::Delete => dag.with_edge_toggled(from, to, false),
                    MoveKind::Reverse => dag
                        .with_edge_toggled(from, to, false)
                        .with_edge_toggled(to, from, true),
                };
                for v in [from, to] {
                    scores[v] = family(v, &dag.parents[v]);
                }
            }
            _ => break,
        }
    }
    let order = smallest_label_order(&dag);
    let bic = scores.iter().sum();
    Ok(BnFit { dag, order, bic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::is_simple;

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|i| format!("X{i}")).collect()
    }

    /// Edges given with 1-based labels.
    fn dag(p: usize, edges: &[(usize, usize)]) -> Dag {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        Dag::new(names(p), &e).unwrap()
    }

    #[test]
    fn rejects_cycles() {
        assert!(matches!(
            Dag::new(names(3), &[(0, 1), (1, 2), (2, 0)]),
            Err(Error::Cyclic)
        ));
    }

    #[test]
    fn topological_order_examples() {
        assert_eq!(topological_orders(&Dag::empty(names(3))).len(), 6);
        assert_eq!(topological_orders(&dag(3, &[(1, 2), (2, 3)])), vec![vec![0, 1, 2]]);
        assert_eq!(
            topological_orders(&dag(3, &[(1, 3), (2, 3)])),
            vec![vec![0, 1, 2], vec![1, 0, 2]]
        );
    }

    #[test]
    fn topological_orders_match_brute_force() {
        let g = dag(4, &[(1, 3), (2, 3), (2, 4)]);
        let brute: Vec<Vec<usize>> = crate::learn::permutations(4)
            .into_iter()
            .filter(|o| is_topological(&g, o))
            .collect();
        assert_eq!(topological_orders(&g), brute);
    }

    #[test]
    fn simple_dag_examples() {
        let empty = Dag::empty(names(4));
        for o in topological_orders(&empty) {
            assert!(is_simple_dag_wrt(&empty, &o).unwrap());
        }
        let sat = Dag::saturated(names(4));
        assert!(is_simple_dag_wrt(&sat, &[0, 1, 2, 3]).unwrap());
        assert!(is_simple_dag(&sat));
        let v = dag(3, &[(1, 3), (2, 3)]);
        assert!(!is_simple_dag_wrt(&v, &[0, 1, 2]).unwrap());
        assert!(!is_simple_dag_wrt(&v, &[1, 0, 2]).unwrap());
        assert!(!is_simple_dag(&v));
        assert!(matches!(
            is_simple_dag_wrt(&v, &[2, 0, 1]),
            Err(Error::NotTopological)
        ));
    }

    #[test]
    fn decomposability_examples() {
        let v = dag(3, &[(1, 3), (2, 3)]);
        assert!(!is_decomposable(&v));
        assert!(!is_decomposable_strict(&v));
        let chain = dag(3, &[(1, 2), (2, 3)]);
        assert!(is_simple_dag(&chain));
        assert!(is_decomposable(&chain));
        assert!(!is_decomposable_strict(&chain));
        let closed = dag(3, &[(1, 2), (1, 3), (2, 3)]);
        assert!(is_decomposable(&closed));
        assert!(is_decomposable_strict(&closed));
        assert!(is_decomposable(&Dag::empty(names(3))));
        assert!(is_decomposable_strict(&Dag::empty(names(3))));
    }

    #[test]
    fn simplify_v_structure() {
        let v = dag(3, &[(1, 3), (2, 3)]);
        let s = simplify_dag(&v, &[0, 1, 2]).unwrap();
        assert_eq!(s.edges(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(is_simple_dag_wrt(&s, &[0, 1, 2]).unwrap());
    }

    #[test]
    fn simplify_five_vertex_example_adds_one_edge() {
        // 3 -> 5 <- 4 with 1, 2 feeding both 3 and 4; two topological orders,
        // simple under neither
        let g = dag(5, &[(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 5), (4, 5)]);
        assert_eq!(topological_orders(&g).len(), 2);
        assert!(!is_simple_dag(&g));
        let s = simplify_dag(&g, &[0, 1, 2, 3, 4]).unwrap();
        let added: Vec<_> = s.edges().into_iter().filter(|e| !g.edges().contains(e)).collect();
        assert_eq!(added, vec![(2, 3)]);
        assert!(is_simple_dag_wrt(&s, &[0, 1, 2, 3, 4]).unwrap());
    }

    #[test]
    fn simplify_fixed_point_on_simple() {
        let g = dag(4, &[(1, 2), (1, 3), (2, 3), (3, 4)]);
        assert!(is_simple_dag_wrt(&g, &[0, 1, 2, 3]).unwrap());
        assert_eq!(simplify_dag(&g, &[0, 1, 2, 3]).unwrap(), g);
    }

    fn bin_vars(p: usize) -> Vec<VariableSpec> {
        names(p).into_iter().map(VariableSpec::binary).collect()
    }

    #[test]
    fn embedding_of_common_cause_matches_fixture() {
        let g = dag(3, &[(1, 2), (1, 3)]);
        let st = bn_to_staged_tree(&g, &bin_vars(3), &[0, 1, 2]).unwrap();
        assert_eq!(st.staging(), fixtures::common_cause().staging());
    }

    #[test]
    fn embedding_extremes() {
        let st = bn_to_staged_tree(&Dag::empty(names(3)), &bin_vars(3), &[2, 0, 1]).unwrap();
        assert_eq!(st.staging().stages_per_depth(), vec![1, 1, 1]);
        let st = bn_to_staged_tree(&Dag::saturated(names(3)), &bin_vars(3), &[0, 1, 2]).unwrap();
        assert_eq!(st.num_stages(), 7);
        assert!(bn_to_staged_tree(&Dag::saturated(names(3)), &bin_vars(3), &[1, 0, 2]).is_err());
    }

    #[test]
    fn embedding_simplicity_matches_dag_simplicity() {
        let v = dag(3, &[(1, 3), (2, 3)]);
        let st = bn_to_staged_tree(&v, &bin_vars(3), &[0, 1, 2]).unwrap();
        assert!(!is_simple(&st));
        let chain = dag(3, &[(1, 2), (2, 3)]);
        let st = bn_to_staged_tree(&chain, &bin_vars(3), &[0, 1, 2]).unwrap();
        assert!(is_simple(&st));
    }

    #[test]
    fn smallest_label_first() {
        let g = dag(4, &[(3, 1), (4, 2)]);
        assert_eq!(smallest_label_order(&g), vec![2, 0, 3, 1]);
    }

    #[test]
    fn hc_single_variable() {
        let d = Dataset::new(bin_vars(1), &[vec![0], vec![1]]).unwrap();
        let fit = learn_bn_hc(&d).unwrap();
        assert_eq!(fit.dag.num_edges(), 0);
    }
}
