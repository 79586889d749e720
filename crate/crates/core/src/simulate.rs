//! Random simple staged trees, parameter and data sampling, the normalized
//! Hamming stage distance and the consistency study built from them.
//!
//! Randomness comes from ChaCha8 streams. A `(seed, stream)` pair selects an
//! independent generator: [`random_simple_tree`] uses stream 0,
//! [`random_parameters`] stream 1 and [`sample`] stream 2 of whatever seed
//! they are handed. The study derives one seed per `(q, replicate)` cell with
//! [`replicate_seed`], so results do not depend on scheduling.

use std::io::Write;
use std::time::Instant;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learn::{closure_propagate, Algorithm};
use crate::model::{
    DepthPartition, EventTree, SimplexMode, StageParameters, StagedTree, Staging, VariableSpec, Vertex,
};
use crate::scoring::count_paths;

/// Tag for the joining scheme of [`random_simple_tree`], written to study
/// and model metadata.
pub const GENERATOR_SCHEME: &str = "sequential-join/1";

const TREE_STREAM: u64 = 0;
const PARAM_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Cardinality of each variable, in tree order.
    pub levels: Vec<usize>,
    /// Joining probability.
    pub q: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn binary(p: usize, q: f64, n: usize, seed: u64) -> Self {
        SimConfig {
            levels: vec![2; p],
            q,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::NoVariables);
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidConfig(format!(
                "joining probability {} outside [0, 1]",
                self.q
            )));
        }
        Ok(())
    }

    /// Variables `X1..Xp` with levels `0..k`.
    pub fn variables(&self) -> Result<Vec<VariableSpec>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, &k)| VariableSpec::with_cardinality(format!("X{}", i + 1), k))
            .collect()
    }
}

/// Random simple staged tree. Depth by depth, the groups forced by the
/// closure of the previous depth are visited in order of their smallest
/// vertex; the first starts a stage and every later one joins a uniformly
/// chosen existing stage with probability `q`, otherwise starts its own.
pub fn random_simple_tree(cfg: &SimConfig) -> Result<StagedTree> {
    cfg.validate()?;
    let tree = EventTree::new(cfg.variables()?)?;
    let mut r = rng(cfg.seed, TREE_STREAM);
    let mut depths = vec![DepthPartition::singletons(1)];
    for d in 1..tree.num_variables() {
        let forced = closure_propagate(&tree, d - 1, &depths[d - 1]);
        let mut stage_of_group: Vec<usize> = Vec::with_capacity(forced.num_blocks());
        let mut n_stages = 0;
        for _ in 0..forced.num_blocks() {
            if n_stages > 0 && r.random_bool(cfg.q) {
                stage_of_group.push(r.random_range(0..n_stages));
            } else {
                stage_of_group.push(n_stages);
                n_stages += 1;
            }
        }
        depths.push(DepthPartition::from_labels(
            (0..tree.width(d)).map(|rank| stage_of_group[forced.label(rank)]),
        ));
    }
    let staging = Staging::new(&tree, depths)?;
    StagedTree::new(tree, staging)
}

/// One vector per stage from the flat Dirichlet distribution, drawn as
/// normalized unit exponentials. Entries are strictly positive.
pub fn random_parameters(st: &StagedTree, seed: u64) -> StageParameters {
    let mut r = rng(seed, PARAM_STREAM);
    let mut vectors = Vec::with_capacity(st.num_stages());
    for d in 0..st.staging().num_depths() {
        let k = st.tree().cardinality(d);
        for _ in 0..st.staging().depth(d).num_blocks() {
            let draws: Vec<f64> = (0..k)
                .map(|_| loop {
                    let e: f64 = r.sample(Exp1);
                    if e > 0.0 {
                        break e;
                    }
                })
                .collect();
            let total: f64 = draws.iter().sum();
            vectors.push(draws.iter().map(|e| e / total).collect());
        }
    }
    StageParameters::new(vectors)
}

/// `n` independent root-to-leaf walks. Columns follow the tree's variables.
pub fn sample(st: &StagedTree, n: usize, seed: u64) -> Result<Dataset> {
    let params = st.params().ok_or(Error::MissingParameters)?;
    let tree = st.tree();
    let p = tree.num_variables();
    let cumulative: Vec<Vec<f64>> = params
        .vectors()
        .iter()
        .map(|v| {
            v.iter()
                .scan(0.0, |acc, &x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut r = rng(seed, SAMPLE_STREAM);
    let mut cells = Vec::with_capacity(n * p);
    for _ in 0..n {
        let mut v = Vertex::ROOT;
        for _ in 0..p {
            let stage = st.staging().stage_of(v);
            let theta = params.get(stage);
            let u: f64 = r.random();
            let cum = &cumulative[stage.0];
            // last positive level absorbs rounding in the cumulative sum
            let x = cum
                .iter()
                .position(|&c| u < c)
                .unwrap_or_else(|| theta.iter().rposition(|&t| t > 0.0).unwrap_or(0));
            cells.push(x as u32);
            v = tree.child(v, x);
        }
    }
    Dataset::from_cells(tree.variables().to_vec(), cells)
}

/// Simple tree, parameters and data for one configuration.
pub fn simulate(cfg: &SimConfig) -> Result<(StagedTree, Dataset)> {
    let st = random_simple_tree(cfg)?;
    let params = random_parameters(&st, cfg.seed);
    let st = st.with_params(params, SimplexMode::Open)?;
    let data = sample(&st, cfg.n, cfg.seed)?;
    Ok((st, data))
}

/// Fewest elements that must change block to turn partition `a` into `b`:
/// `n` minus the best total overlap of a one-to-one block matching.
pub fn transfer_distance(a: &DepthPartition, b: &DepthPartition) -> usize {
    assert_eq!(a.len(), b.len(), "partitions of different sets");
    let (rows, cols) = if a.num_blocks() <= b.num_blocks() { (a, b) } else { (b, a) };
    let mut overlap = Matrix::new(rows.num_blocks(), cols.num_blocks(), 0i64);
    for i in 0..a.len() {
        overlap[(rows.label(i), cols.label(i))] += 1;
    }
    let (matched, _) = kuhn_munkres(&overlap);
    a.len() - matched as usize
}

/// Sum over depths of the transfer distance between the two stagings,
/// each divided by the number of vertices at that depth.
pub fn hamming_stage_distance(a: &StagedTree, b: &StagedTree) -> Result<f64> {
    if a.tree() != b.tree() {
        return Err(Error::TreeMismatch);
    }
    Ok((0..a.staging().num_depths())
        .map(|d| {
            let (pa, pb) = (a.staging().depth(d), b.staging().depth(d));
            transfer_distance(pa, pb) as f64 / pa.len() as f64
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub levels: Vec<usize>,
    pub qs: Vec<f64>,
    pub ns: Vec<usize>,
    pub replicates: usize,
    /// Fixed-order learners, fitted with the generating order.
    pub learners: Vec<Algorithm>,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Whether rows carry wall-clock times; off keeps output reproducible.
    pub record_timing: bool,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        for &q in &self.qs {
            SimConfig { levels: self.levels.clone(), q, n: 0, seed: 0 }.validate()?;
        }
        if let Some(a) = self.learners.iter().find(|a| !a.needs_order()) {
            return Err(Error::InvalidConfig(format!(
                "study learners are fitted with the true order; `{a}` searches orders"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub q: f64,
    pub n: usize,
    pub replicate: usize,
    pub learner: Algorithm,
    pub distance: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub q: f64,
    pub n: usize,
    pub learner: Algorithm,
    pub count: usize,
    pub mean: f64,
    /// 95% normal-approximation interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Seed for one `(q, replicate)` cell. The generating tree and parameters
/// of a replicate are shared across sample sizes, and the datasets for
/// different `N` are prefixes of one stream.
pub fn replicate_seed(seed: u64, q_index: usize, replicate: usize) -> u64 {
    // splitmix64 finalizer over the packed cell key
    let mut z = seed
        ^ (q_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (replicate as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_replicate(cfg: &StudyConfig, qi: usize, rep: usize) -> Result<Vec<StudyRow>> {
    let q = cfg.qs[qi];
    let seed = replicate_seed(cfg.seed, qi, rep);
    let max_n = cfg.ns.iter().copied().max().unwrap_or(0);
    let sim = SimConfig { levels: cfg.levels.clone(), q, n: max_n, seed };
    let (truth, data) = simulate(&sim)?;
    let order: Vec<usize> = (0..cfg.levels.len()).collect();
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let subset = Dataset::from_cells(
            data.variables().to_vec(),
            data.cells()[..n * data.n_vars()].to_vec(),
        )?;
        let counts = count_paths(&subset, &order)?;
        for &learner in &cfg.learners {
            let fit = learner.fixed_order_learner().expect("validated fixed-order learner");
            let start = Instant::now();
            let fitted = fit(&counts)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            rows.push(StudyRow {
                q,
                n,
                replicate: rep,
                learner,
                distance: hamming_stage_distance(&fitted.model, &truth)?,
                wall_ms: cfg.record_timing.then_some(elapsed),
            });
        }
    }
    Ok(rows)
}

/// Runs every `(q, replicate)` cell, in parallel when more than one thread
/// is available. Rows are ordered by q, replicate, N and learner.
pub fn run_consistency_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.qs.len())
        .flat_map(|qi| (0..cfg.replicates).map(move |r| (qi, r)))
        .collect();
    let run = || -> Result<Vec<StudyRow>> {
        let per_cell: Vec<Vec<StudyRow>> = cells
            .par_iter()
            .map(|&(qi, r)| run_replicate(cfg, qi, r))
            .collect::<Result<_>>()?;
        Ok(per_cell.into_iter().flatten().collect())
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Mean and 95% interval per `(q, N, learner)`, in grid order.
pub fn summarize(cfg: &StudyConfig, rows: &[StudyRow]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for &q in &cfg.qs {
        for &n in &cfg.ns {
            for &learner in &cfg.learners {
                let xs: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.q == q && r.n == n && r.learner == learner)
                    .map(|r| r.distance)
                    .collect();
                if xs.is_empty() {
                    continue;
                }
                let m = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / m;
                let var = if xs.len() > 1 {
                    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
                } else {
                    0.0
                };
                let half = 1.96 * (var / m).sqrt();
                out.push(CellSummary {
                    q,
                    n,
                    learner,
                    count: xs.len(),
                    mean,
                    ci_low: mean - half,
                    ci_high: mean + half,
                });
            }
        }
    }
    out
}

/// Study rows as CSV with header `q,N,replicate,learner,distance,wall_ms`.
/// `wall_ms` is empty when timing was not recorded.
pub fn write_study_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "N", "replicate", "learner", "distance", "wall_ms"])?;
    for r in rows {
        w.write_record([
            format!("{:.6}", r.q),
            r.n.to_string(),
            r.replicate.to_string(),
            r.learner.id().to_string(),
            format!("{:.6}", r.distance),
            r.wall_ms.map(|t| format!("{t:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
