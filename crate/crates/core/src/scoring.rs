//! Sufficient statistics and BIC scoring for staged trees.
//!
//! Counts are stored densely per depth: `n(v, x)` for vertex rank `v` lives
//! at index `v * k + x`, where `k` is the cardinality of the variable at
//! that depth. Log-likelihoods use the plug-in MLE with `0 ln 0 = 0`.

use crate::data::{check_permutation, Dataset};
use crate::error::{Error, Result};
use crate::model::{EventTree, StageId, StageParameters, StagedTree, Vertex};

/// Path counts of a dataset under a fixed variable order.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTree {
    tree: EventTree,
    order: Vec<usize>,
    counts: Vec<Vec<u64>>,
    n: u64,
}

pub fn count_paths(data: &Dataset, order: &[usize]) -> Result<CountTree> {
    check_permutation(order, data.n_vars())?;
    count_prefix(data, order)
}

/// Counts for the first `order.len()` variables of an order (a marginal
/// tree), used when growing an order one variable at a time.
pub(crate) fn count_prefix(data: &Dataset, order: &[usize]) -> Result<CountTree> {
    let tree = EventTree::new(data.ordered_variables(order))?;
    let mut counts: Vec<Vec<u64>> = (0..order.len())
        .map(|d| vec![0u64; tree.width(d) * tree.cardinality(d)])
        .collect();
    for row in data.rows() {
        let mut rank = 0usize;
        for (d, &col) in order.iter().enumerate() {
            let k = tree.cardinality(d);
            let idx = rank * k + row[col] as usize;
            counts[d][idx] += 1;
            rank = idx;
        }
    }
    Ok(CountTree {
        tree,
        order: order.to_vec(),
        counts,
        n: data.n_rows() as u64,
    })
}

impl CountTree {
    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    /// Dataset column of each depth.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `n(v, x)` for every vertex at `depth`, flattened as `rank * k + x`.
    pub fn depth_counts(&self, depth: usize) -> &[u64] {
        &self.counts[depth]
    }

    pub fn edge_counts(&self, v: Vertex) -> &[u64] {
        let k = self.tree.cardinality(v.depth);
        &self.counts[v.depth][v.rank * k..v.rank * k + k]
    }

    pub fn edge_count(&self, v: Vertex, level: usize) -> u64 {
        self.edge_counts(v)[level]
    }

    pub fn vertex_count(&self, v: Vertex) -> u64 {
        if v.depth == self.tree.num_variables() {
            let (parent, x) = self.tree.parent(v).expect("leaf has a parent");
            return self.edge_count(parent, x);
        }
        self.edge_counts(v).iter().sum()
    }

    pub(crate) fn check_tree(&self, tree: &EventTree) -> Result<()> {
        if &self.tree != tree {
            return Err(Error::OrderMismatch);
        }
        Ok(())
    }
}

/// `sum_x n_x ln(n_x / n)` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn multinomial_ll(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let ln_total = (total as f64).ln();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * ((c as f64).ln() - ln_total))
        .sum()
}

#[inline]
pub(crate) fn add_into(acc: &mut [u64], other: &[u64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Pooled counts `n(s, x)` of every stage, indexed by global stage id.
pub fn stage_counts(st: &StagedTree, counts: &CountTree) -> Result<Vec<Vec<u64>>> {
    counts.check_tree(st.tree())?;
    let tree = st.tree();
    let staging = st.staging();
    let mut out = Vec::with_capacity(staging.num_stages());
    for d in 0..tree.num_variables() {
        let k = tree.cardinality(d);
        let part = staging.depth(d);
        let mut pooled = vec![vec![0u64; k]; part.num_blocks()];
        let flat = counts.depth_counts(d);
        for r in 0..tree.width(d) {
            add_into(&mut pooled[part.label(r)], &flat[r * k..r * k + k]);
        }
        out.extend(pooled);
    }
    Ok(out)
}

/// Stage-wise maximum likelihood estimates with optional additive smoothing
/// `alpha` per cell. Stages without observations get the uniform vector.
pub fn mle_parameters(st: &StagedTree, counts: &CountTree, alpha: f64) -> Result<StageParameters> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing must be a nonnegative number, got {alpha}"
        )));
    }
    let pooled = stage_counts(st, counts)?;
    let vectors = pooled
        .into_iter()
        .map(|c| {
            let k = c.len() as f64;
            let total = c.iter().sum::<u64>() as f64 + alpha * k;
            if total > 0.0 {
                c.iter().map(|&x| (x as f64 + alpha) / total).collect()
            } else {
                vec![1.0 / k; c.len()]
            }
        })
        .collect();
    Ok(StageParameters::new(vectors))
}

/// Maximized log-likelihood of the staging on the counts.
pub fn log_likelihood(st: &StagedTree, counts: &CountTree) -> Result<f64> {
    Ok(stage_counts(st, counts)?
        .iter()
        .map(|c| multinomial_ll(c))
        .sum())
}

/// Log-likelihood contribution of one depth.
pub fn depth_log_likelihood(st: &StagedTree, counts: &CountTree, depth: usize) -> Result<f64> {
    counts.check_tree(st.tree())?;
    let k = st.tree().cardinality(depth);
    let part = st.staging().depth(depth);
    let flat = counts.depth_counts(depth);
    let mut pooled = vec![vec![0u64; k]; part.num_blocks()];
    for r in 0..part.len() {
        add_into(&mut pooled[part.label(r)], &flat[r * k..r * k + k]);
    }
    Ok(pooled.iter().map(|c| multinomial_ll(c)).sum())
}

/// Dimension of the parameter space: one simplex per stage.
pub fn n_free_params(st: &StagedTree) -> usize {
    let tree = st.tree();
    (0..tree.num_variables())
        .map(|d| st.staging().depth(d).num_blocks() * (tree.cardinality(d) - 1))
        .sum()
}

pub(crate) fn ln_n(counts: &CountTree) -> Result<f64> {
    if counts.n() == 0 {
        return Err(Error::EmptyData);
    }
    Ok((counts.n() as f64).ln())
}

/// `k ln N - 2 logL`; lower is better.
pub fn bic(st: &StagedTree, counts: &CountTree) -> Result<f64> {
    Ok(score(st, counts)?.bic)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub log_likelihood: f64,
    pub n_params: usize,
    pub n: u64,
    pub bic: f64,
}

pub fn score(st: &StagedTree, counts: &CountTree) -> Result<Score> {
    let ln_n = ln_n(counts)?;
    let log_likelihood = log_likelihood(st, counts)?;
    let n_params = n_free_params(st);
    Ok(Score {
        log_likelihood,
        n_params,
        n: counts.n(),
        bic: n_params as f64 * ln_n - 2.0 * log_likelihood,
    })
}

/// BIC change from merging stages `a` and `b` at `depth`, computed from the
/// two stages' pooled counts only.
pub fn delta_bic_merge(
    st: &StagedTree,
    counts: &CountTree,
    depth: usize,
    a: StageId,
    b: StageId,
) -> Result<f64> {
    counts.check_tree(st.tree())?;
    let ln_n = ln_n(counts)?;
    let staging = st.staging();
    let locate = |s: StageId| match staging.locate(s) {
        Some((d, local)) if d == depth => Ok(local),
        _ => Err(Error::InvalidStage { depth, stage: s.0 }),
    };
    let la = locate(a)?;
    let lb = locate(b)?;
    if la == lb {
        return Err(Error::InvalidStage { depth, stage: a.0 });
    }
    let k = st.tree().cardinality(depth);
    let part = staging.depth(depth);
    let flat = counts.depth_counts(depth);
    let mut ca = vec![0u64; k];
    let mut cb = vec![0u64; k];
    for r in 0..part.len() {
        let l = part.label(r);
        if l == la {
            add_into(&mut ca, &flat[r * k..r * k + k]);
        } else if l == lb {
            add_into(&mut cb, &flat[r * k..r * k + k]);
        }
    }
    Ok(merge_delta(&ca, &cb, k, ln_n))
}

/// BIC delta of pooling two count vectors into one stage.
#[inline]
pub(crate) fn merge_delta(a: &[u64], b: &[u64], k: usize, ln_n: f64) -> f64 {
    let merged: Vec<u64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let d_ll = multinomial_ll(&merged) - multinomial_ll(a) - multinomial_ll(b);
    -((k - 1) as f64) * ln_n - 2.0 * d_ll
}
