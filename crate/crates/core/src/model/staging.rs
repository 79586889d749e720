use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::tree::{EventTree, Vertex};

/// Partition of the vertices of one depth, stored as canonical block labels:
/// labels are dense and numbered in order of first appearance by rank, so two
/// partitions are equal iff their label vectors are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DepthPartition {
    labels: Vec<u32>,
    blocks: usize,
}

impl DepthPartition {
    /// Canonicalizes arbitrary block keys into a partition.
    pub fn from_labels<I, K>(keys: I) -> Self
    where
        I: IntoIterator<Item = K>,
        K: std::hash::Hash + Eq,
    {
        let mut seen: HashMap<K, u32> = HashMap::new();
        let labels = keys
            .into_iter()
            .map(|k| {
                let next = seen.len() as u32;
                *seen.entry(k).or_insert(next)
            })
            .collect();
        DepthPartition {
            labels,
            blocks: seen.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        DepthPartition {
            labels: (0..n as u32).collect(),
            blocks: n,
        }
    }

    pub fn single_block(n: usize) -> Self {
        DepthPartition {
            labels: vec![0; n],
            blocks: usize::from(n > 0),
        }
    }

    /// Builds a partition of `0..n` from explicit blocks; blocks must be
    /// nonempty, disjoint and cover every element.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut owner = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidStaging(format!("block {b} is empty")));
            }
            for &r in block {
                if r >= n {
                    return Err(Error::InvalidStaging(format!(
                        "vertex rank {r} out of range (width {n})"
                    )));
                }
                if owner[r] != usize::MAX {
                    return Err(Error::InvalidStaging(format!(
                        "vertex rank {r} appears in more than one block"
                    )));
                }
                owner[r] = b;
            }
        }
        if let Some(r) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidStaging(format!(
                "vertex rank {r} is not in any block"
            )));
        }
        Ok(Self::from_labels(owner))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    #[inline]
    pub fn label(&self, rank: usize) -> usize {
        self.labels[rank] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Blocks in label order, each listing its member ranks ascending.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (r, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(r);
        }
        out
    }

    /// True iff every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &DepthPartition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![u32::MAX; self.blocks];
        for (r, &l) in self.labels.iter().enumerate() {
            let c = coarser.labels[r];
            let slot = &mut image[l as usize];
            if *slot == u32::MAX {
                *slot = c;
            } else if *slot != c {
                return false;
            }
        }
        true
    }
}

/// Global stage identifier, unique within a model. Stage ids are assigned
/// depth by depth, and within a depth in canonical block order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageId(pub usize);

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Per-depth partitions of the internal vertices of an event tree. Depth 0
/// is always the singleton root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Staging {
    depths: Vec<DepthPartition>,
    offsets: Vec<usize>,
}

impl Staging {
    pub fn new(tree: &EventTree, depths: Vec<DepthPartition>) -> Result<Self> {
        if depths.len() != tree.num_variables() {
            return Err(Error::InvalidStaging(format!(
                "expected {} depths, found {}",
                tree.num_variables(),
                depths.len()
            )));
        }
        for (d, part) in depths.iter().enumerate() {
            if part.len() != tree.width(d) {
                return Err(Error::InvalidStaging(format!(
                    "depth {d} has {} vertices, partition covers {}",
                    tree.width(d),
                    part.len()
                )));
            }
        }
        Ok(Self::from_parts(depths))
    }

    pub(crate) fn from_parts(depths: Vec<DepthPartition>) -> Self {
        let mut offsets = Vec::with_capacity(depths.len() + 1);
        offsets.push(0);
        for part in &depths {
            offsets.push(offsets.last().unwrap() + part.num_blocks());
        }
        Staging { depths, offsets }
    }

    /// Every internal vertex in its own stage.
    pub fn full(tree: &EventTree) -> Self {
        Self::from_parts(
            (0..tree.num_variables())
                .map(|d| DepthPartition::singletons(tree.width(d)))
                .collect(),
        )
    }

    /// One stage per depth: the full-independence model.
    pub fn independence(tree: &EventTree) -> Self {
        Self::from_parts(
            (0..tree.num_variables())
                .map(|d| DepthPartition::single_block(tree.width(d)))
                .collect(),
        )
    }

    pub fn from_blocks(tree: &EventTree, blocks: &[Vec<Vec<usize>>]) -> Result<Self> {
        if blocks.len() != tree.num_variables() {
            return Err(Error::InvalidStaging(format!(
                "expected {} depths, found {}",
                tree.num_variables(),
                blocks.len()
            )));
        }
        let depths = blocks
            .iter()
            .enumerate()
            .map(|(d, b)| DepthPartition::from_blocks(tree.width(d), b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tree, depths)
    }

    pub fn num_depths(&self) -> usize {
        self.depths.len()
    }

    pub fn depth(&self, d: usize) -> &DepthPartition {
        &self.depths[d]
    }

    pub fn depths(&self) -> &[DepthPartition] {
        &self.depths
    }

    pub fn num_stages(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn stages_per_depth(&self) -> Vec<usize> {
        self.depths.iter().map(|p| p.num_blocks()).collect()
    }

    #[inline]
    pub fn stage_of(&self, v: Vertex) -> StageId {
        StageId(self.offsets[v.depth] + self.depths[v.depth].label(v.rank))
    }

    pub fn stage_id(&self, depth: usize, local: usize) -> StageId {
        StageId(self.offsets[depth] + local)
    }

    /// Depth and within-depth block index of a global stage id.
    pub fn locate(&self, stage: StageId) -> Option<(usize, usize)> {
        if stage.0 >= self.num_stages() {
            return None;
        }
        let depth = self.offsets.partition_point(|&o| o <= stage.0) - 1;
        Some((depth, stage.0 - self.offsets[depth]))
    }

    pub fn members(&self, stage: StageId) -> Vec<Vertex> {
        match self.locate(stage) {
            Some((depth, local)) => self.depths[depth]
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, &l)| l as usize == local)
                .map(|(r, _)| Vertex::new(depth, r))
                .collect(),
            None => Vec::new(),
        }
    }
}

/// How strictly stage probability vectors are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SimplexMode {
    /// Entries strictly inside (0, 1).
    Open,
    /// Entries in [0, 1]; the mode for fitted models with empty cells.
    #[default]
    Closed,
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Conditional probability vectors, indexed by global stage id.
#[derive(Clone, Debug, PartialEq)]
pub struct StageParameters {
    vectors: Vec<Vec<f64>>,
}

impl StageParameters {
    pub fn new(vectors: Vec<Vec<f64>>) -> Self {
        StageParameters { vectors }
    }

    pub fn uniform(tree: &EventTree, staging: &Staging) -> Self {
        let mut vectors = Vec::with_capacity(staging.num_stages());
        for d in 0..staging.num_depths() {
            let k = tree.cardinality(d);
            for _ in 0..staging.depth(d).num_blocks() {
                vectors.push(vec![1.0 / k as f64; k]);
            }
        }
        StageParameters { vectors }
    }

    pub fn get(&self, stage: StageId) -> &[f64] {
        &self.vectors[stage.0]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn validate(&self, tree: &EventTree, staging: &Staging, mode: SimplexMode) -> Result<()> {
        if self.vectors.len() != staging.num_stages() {
            return Err(Error::InvalidParameters(format!(
                "{} stages but {} parameter vectors",
                staging.num_stages(),
                self.vectors.len()
            )));
        }
        for d in 0..staging.num_depths() {
            let k = tree.cardinality(d);
            for local in 0..staging.depth(d).num_blocks() {
                let id = staging.stage_id(d, local);
                let v = &self.vectors[id.0];
                if v.len() != k {
                    return Err(Error::InvalidParameters(format!(
                        "stage {id} has {} entries, expected {k}",
                        v.len()
                    )));
                }
                let bad = v.iter().any(|&x| match mode {
                    SimplexMode::Open => !(x > 0.0 && x < 1.0),
                    SimplexMode::Closed => !(0.0..=1.0).contains(&x),
                });
                if bad {
                    return Err(Error::InvalidParameters(format!(
                        "stage {id} has an entry outside the {} simplex",
                        if mode == SimplexMode::Open { "open" } else { "closed" }
                    )));
                }
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(Error::InvalidParameters(format!(
                        "stage {id} sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StagedTree {
    tree: EventTree,
    staging: Staging,
    params: Option<StageParameters>,
}

impl StagedTree {
    pub fn new(tree: EventTree, staging: Staging) -> Result<Self> {
        let staging = Staging::new(&tree, staging.depths)?;
        Ok(StagedTree {
            tree,
            staging,
            params: None,
        })
    }

    /// Every vertex in its own stage.
    pub fn full(tree: EventTree) -> Self {
        let staging = Staging::full(&tree);
        StagedTree {
            tree,
            staging,
            params: None,
        }
    }

    pub fn with_params(mut self, params: StageParameters, mode: SimplexMode) -> Result<Self> {
        params.validate(&self.tree, &self.staging, mode)?;
        self.params = Some(params);
        Ok(self)
    }

    pub fn without_params(mut self) -> Self {
        self.params = None;
        self
    }

    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn staging(&self) -> &Staging {
        &self.staging
    }

    pub fn params(&self) -> Option<&StageParameters> {
        self.params.as_ref()
    }

    pub fn num_stages(&self) -> usize {
        self.staging.num_stages()
    }

    pub fn into_parts(self) -> (EventTree, Staging, Option<StageParameters>) {
        (self.tree, self.staging, self.params)
    }

    /// Probability of every leaf (indexed by leaf rank): the product of the
    /// stage probabilities along its root-to-leaf path.
    pub fn atom_probabilities(&self) -> Result<Vec<f64>> {
        let params = self.params.as_ref().ok_or(Error::MissingParameters)?;
        let mut probs = vec![1.0];
        for d in 0..self.tree.num_variables() {
            let k = self.tree.cardinality(d);
            let mut next = vec![0.0; self.tree.width(d + 1)];
            for (rank, &p) in probs.iter().enumerate() {
                let theta = params.get(self.staging.stage_of(Vertex::new(d, rank)));
                for x in 0..k {
                    next[rank * k + x] = p * theta[x];
                }
            }
            probs = next;
        }
        Ok(probs)
    }
}
