//! Learners that also choose the variable order.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learn::fixed::{learn_marginal, learn_total, marginal_depth};
use crate::learn::{closure_propagate, Fitted};
use crate::model::{DepthPartition, StagedTree, Staging};
use crate::scoring::{count_paths, count_prefix, multinomial_ll, CountTree};

pub const DEFAULT_MAX_EXHAUSTIVE_P: usize = 7;

/// Inner learner run for each candidate order in exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerLearner {
    Marginal,
    Total,
}

impl InnerLearner {
    fn run(self, counts: &CountTree) -> Result<Fitted> {
        match self {
            InnerLearner::Marginal => learn_marginal(counts),
            InnerLearner::Total => learn_total(counts),
        }
    }
}

/// BIC contribution of one depth of the full staging: the baseline that
/// `marginal_depth` deltas are measured against.
fn full_depth_bic(counts: &CountTree, depth: usize, ln_n: f64) -> f64 {
    let tree = counts.tree();
    let k = tree.cardinality(depth);
    let flat = counts.depth_counts(depth);
    let ll: f64 = (0..tree.width(depth))
        .map(|r| multinomial_ll(&flat[r * k..r * k + k]))
        .sum();
    (tree.width(depth) * (k - 1)) as f64 * ln_n - 2.0 * ll
}

/// Grows the order one variable at a time. Each candidate is appended,
/// its depth optimized as in the marginal learner (respecting the closure
/// of the committed prefix), and scored by the BIC of the extended prefix
/// model. Ties go to the lexicographically smaller variable name.
pub fn learn_greedy_order_marginal(data: &Dataset) -> Result<Fitted> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let ln_n = (data.n_rows() as f64).ln();
    let p = data.n_vars();
    let mut prefix: Vec<usize> = Vec::with_capacity(p);
    let mut depths: Vec<DepthPartition> = Vec::with_capacity(p);
    let mut prefix_bic = 0.0;

    let mut candidates: Vec<usize> = (0..p).collect();
    candidates.sort_by(|&a, &b| data.variables()[a].name.cmp(&data.variables()[b].name));

    for depth in 0..p {
        let mut best: Option<(f64, usize, DepthPartition)> = None;
        for &cand in candidates.iter().filter(|c| !prefix.contains(c)) {
            let mut order = prefix.clone();
            order.push(cand);
            let counts = count_prefix(data, &order)?;
            let forced = match depths.last() {
                None => DepthPartition::singletons(1),
                Some(prev) => closure_propagate(counts.tree(), depth - 1, prev),
            };
            let (part, delta) = marginal_depth(&counts, depth, &forced, ln_n);
            let total = prefix_bic + full_depth_bic(&counts, depth, ln_n) + delta;
            if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                best = Some((total, cand, part));
            }
        }
        let (total, cand, part) = best.expect("at least one candidate remains");
        prefix.push(cand);
        depths.push(part);
        prefix_bic = total;
    }

    let counts = count_paths(data, &prefix)?;
    let staging = Staging::new(counts.tree(), depths)?;
    Ok(Fitted {
        model: StagedTree::new(counts.tree().clone(), staging)?,
        order: prefix,
        bic: prefix_bic,
    })
}

/// All permutations of `0..p` in lexicographic order.
pub fn permutations(p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..p).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..p).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..p).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveOptions {
    pub max_p: usize,
    pub allow_large_p: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        ExhaustiveOptions {
            max_p: DEFAULT_MAX_EXHAUSTIVE_P,
            allow_large_p: false,
            threads: None,
        }
    }
}

/// Runs `inner` under every variable order and keeps the lowest BIC; ties
/// go to the lexicographically smallest order. Orders are evaluated in
/// parallel and the reduction does not depend on scheduling.
pub fn learn_exhaustive(data: &Dataset, inner: InnerLearner, opts: ExhaustiveOptions) -> Result<Fitted> {
    let p = data.n_vars();
    if p > opts.max_p && !opts.allow_large_p {
        return Err(Error::TooManyVariables { p, cap: opts.max_p });
    }
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let orders = permutations(p);
    let search = || -> Result<Fitted> {
        orders
            .par_iter()
            .map(|order| inner.run(&count_paths(data, order)?))
            .try_reduce_with(|a, b| Ok(better(a, b)))
            .expect("at least one order")
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(search),
        None => search(),
    }
}

fn better(a: Fitted, b: Fitted) -> Fitted {
    match a.bic.total_cmp(&b.bic).then_with(|| a.order.cmp(&b.order)) {
        std::cmp::Ordering::Greater => b,
        _ => a,
    }
}
