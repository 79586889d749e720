//! Random structures and independent oracles shared by the integration
//! tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stagecraft::bn::Dag;
use stagecraft::model::{
    DepthPartition, EventTree, SimplexMode, StageParameters, StagedTree, Staging, VariableSpec, Vertex,
};
use stagecraft::simulate::sample;
use stagecraft::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

/// Variables `X1..Xp` with cardinalities drawn from `2..=max_k`.
pub fn random_variables(r: &mut impl Rng, p: usize, max_k: usize) -> Vec<VariableSpec> {
    (1..=p)
        .map(|i| VariableSpec::with_cardinality(format!("X{i}"), r.random_range(2..=max_k)).unwrap())
        .collect()
}

/// Arbitrary (not necessarily simple) staging: each depth gets a random
/// number of blocks and random labels.
pub fn random_staging(r: &mut impl Rng, tree: &EventTree) -> Staging {
    let depths = (0..tree.num_variables())
        .map(|d| {
            let w = tree.width(d);
            let blocks = r.random_range(1..=w);
            DepthPartition::from_labels((0..w).map(|_| r.random_range(0..blocks)))
        })
        .collect();
    Staging::new(tree, depths).unwrap()
}

pub fn random_staged_tree(r: &mut impl Rng, max_p: usize, max_k: usize) -> StagedTree {
    let p = r.random_range(1..=max_p);
    let tree = EventTree::new(random_variables(r, p, max_k)).unwrap();
    let staging = random_staging(r, &tree);
    StagedTree::new(tree, staging).unwrap()
}

/// Flat-Dirichlet-like stage vectors (normalized uniforms bounded away
/// from 0).
pub fn random_params(r: &mut impl Rng, st: &StagedTree) -> StageParameters {
    let mut vectors = Vec::new();
    for d in 0..st.staging().num_depths() {
        let k = st.tree().cardinality(d);
        for _ in 0..st.staging().depth(d).num_blocks() {
            let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            vectors.push(raw.into_iter().map(|x| x / s).collect());
        }
    }
    StageParameters::new(vectors)
}

/// Data sampled from a random staging with random parameters.
pub fn random_dataset(r: &mut impl Rng, max_p: usize, max_k: usize, n: usize) -> Dataset {
    let st = random_staged_tree(r, max_p, max_k);
    let params = random_params(r, &st);
    let st = st.with_params(params, SimplexMode::Open).unwrap();
    sample(&st, n, r.random()).unwrap()
}

/// DAG whose vertices are consistent with a random permutation, each
/// admissible edge present with probability `density`.
pub fn random_dag(r: &mut impl Rng, p: usize, density: f64) -> Dag {
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(r);
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if r.random_bool(density) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    Dag::new(names(p), &edges).unwrap()
}

/// DAG that is simple along a random order: each vertex takes a random
/// subset of its predecessor's parents plus the predecessor.
pub fn random_simple_dag(r: &mut impl Rng, p: usize) -> (Dag, Vec<usize>) {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(r);
    let mut parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p];
    for i in 1..p {
        let (prev, cur) = (order[i - 1], order[i]);
        let mut pool: Vec<usize> = parents[prev].iter().copied().collect();
        pool.push(prev);
        parents[cur] = pool.into_iter().filter(|_| r.random_bool(0.6)).collect();
    }
    let edges: Vec<(usize, usize)> = parents
        .iter()
        .enumerate()
        .flat_map(|(to, ps)| ps.iter().map(move |&from| (from, to)))
        .collect();
    (Dag::new(names(p), &edges).unwrap(), order)
}

/// Stage of every observation step, tallied from raw rows.
fn stage_tallies(st: &StagedTree, data: &Dataset, order: &[usize]) -> HashMap<usize, Vec<u64>> {
    let tree = st.tree();
    let mut tallies: HashMap<usize, Vec<u64>> = HashMap::new();
    for row in data.rows() {
        let mut v = Vertex::ROOT;
        for (d, &col) in order.iter().enumerate() {
            let x = row[col] as usize;
            let stage = st.staging().stage_of(v).0;
            tallies.entry(stage).or_insert_with(|| vec![0; tree.cardinality(d)])[x] += 1;
            v = tree.child(v, x);
        }
    }
    tallies
}

fn xlogx_ll(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64 / total as f64).ln())
        .sum()
}

/// Maximized log-likelihood computed by walking every row through the tree.
pub fn oracle_log_likelihood(st: &StagedTree, data: &Dataset, order: &[usize]) -> f64 {
    let mut stages: Vec<_> = stage_tallies(st, data, order).into_iter().collect();
    stages.sort_by_key(|(s, _)| *s);
    stages.iter().map(|(_, c)| xlogx_ll(c)).sum()
}

pub fn oracle_bic(st: &StagedTree, data: &Dataset, order: &[usize]) -> f64 {
    let tree = st.tree();
    let k: usize = (0..st.staging().num_depths())
        .map(|d| st.staging().depth(d).num_blocks() * (tree.cardinality(d) - 1))
        .sum();
    k as f64 * (data.n_rows() as f64).ln() - 2.0 * oracle_log_likelihood(st, data, order)
}

/// Saturated log-likelihood from leaf (full row) frequencies.
pub fn saturated_log_likelihood(data: &Dataset) -> f64 {
    let mut freq: HashMap<Vec<u32>, u64> = HashMap::new();
    for row in data.rows() {
        *freq.entry(row.to_vec()).or_default() += 1;
    }
    let n = data.n_rows() as f64;
    let mut terms: Vec<_> = freq.into_iter().collect();
    terms.sort();
    terms.iter().map(|(_, c)| *c as f64 * (*c as f64 / n).ln()).sum()
}

/// Transfer distance by trying every injection of the smaller block list
/// into the larger.
pub fn brute_transfer_distance(a: &DepthPartition, b: &DepthPartition) -> usize {
    let n = a.len();
    let (small, large) = if a.num_blocks() <= b.num_blocks() { (a, b) } else { (b, a) };
    let mut overlap = vec![vec![0usize; large.num_blocks()]; small.num_blocks()];
    for i in 0..n {
        overlap[small.label(i)][large.label(i)] += 1;
    }
    fn best(row: usize, used: &mut Vec<bool>, overlap: &[Vec<usize>]) -> usize {
        if row == overlap.len() {
            return 0;
        }
        let mut top = 0;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                top = top.max(overlap[row][c] + best(row + 1, used, overlap));
                used[c] = false;
            }
        }
        top
    }
    n - best(0, &mut vec![false; large.num_blocks()], &overlap)
}

/// Minimal check that a DOT document is a single well-formed digraph of
/// node and edge statements.
pub fn check_dot(text: &str) -> Result<(), String> {
    let id = r"[A-Za-z_][A-Za-z0-9_]*";
    let value = r#"(?:"(?:[^"\\]|\\.)*"|[A-Za-z0-9_.#]+)"#;
    let attrs = format!(r"\[\s*{id}\s*=\s*{value}(?:\s*,\s*{id}\s*=\s*{value})*\s*\]");
    let node = regex::Regex::new(&format!(r"^(?:{id}|node|edge)\s*{attrs};$")).unwrap();
    let edge = regex::Regex::new(&format!(r"^{id}\s*->\s*{id}\s*(?:{attrs})?;$")).unwrap();
    let graph_attr = regex::Regex::new(&format!(r"^{id}\s*=\s*{value};$")).unwrap();
    let header = regex::Regex::new(&format!(r"^digraph\s+{id}\s*\{{$")).unwrap();

    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.len() < 2 || !header.is_match(lines[0]) || *lines.last().unwrap() != "}" {
        return Err("missing digraph header or closing brace".into());
    }
    for line in &lines[1..lines.len() - 1] {
        if !(node.is_match(line) || edge.is_match(line) || graph_attr.is_match(line)) {
            return Err(format!("unparseable statement: {line}"));
        }
    }
    Ok(())
}
