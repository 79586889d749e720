use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A categorical variable and its ordered sample space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub levels: Vec<String>,
}

impl VariableSpec {
    pub fn new<S: Into<String>>(name: S, levels: Vec<String>) -> Result<Self> {
        let spec = VariableSpec {
            name: name.into(),
            levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Variable with levels labelled `0..k`.
    pub fn with_cardinality<S: Into<String>>(name: S, k: usize) -> Result<Self> {
        Self::new(name, (0..k).map(|i| i.to_string()).collect())
    }

    pub fn binary<S: Into<String>>(name: S) -> Self {
        VariableSpec {
            name: name.into(),
            levels: vec!["0".into(), "1".into()],
        }
    }

    pub fn cardinality(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::TooFewLevels {
                name: self.name.clone(),
                levels: self.levels.len(),
            });
        }
        let mut seen = HashSet::new();
        for level in &self.levels {
            if !seen.insert(level.as_str()) {
                return Err(Error::DuplicateLevel {
                    name: self.name.clone(),
                    level: level.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Address of a tree vertex: its depth and the mixed-radix rank of its value
/// prefix (first variable most significant).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub depth: usize,
    pub rank: usize,
}

impl Vertex {
    pub const ROOT: Vertex = Vertex { depth: 0, rank: 0 };

    pub fn new(depth: usize, rank: usize) -> Self {
        Vertex { depth, rank }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.depth, self.rank)
    }
}

/// X-compatible event tree. The skeleton is implicit in the ordered variable
/// list: depth `d` holds one vertex per value prefix of the first `d`
/// variables, and the variable emanating from depth `d` is `variables[d]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventTree {
    variables: Vec<VariableSpec>,
    widths: Vec<usize>,
}

impl EventTree {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::NoVariables);
        }
        let mut names = HashSet::new();
        for var in &variables {
            var.validate()?;
            if !names.insert(var.name.as_str()) {
                return Err(Error::DuplicateVariable(var.name.clone()));
            }
        }
        let mut widths = Vec::with_capacity(variables.len() + 1);
        widths.push(1usize);
        for var in &variables {
            let last = *widths.last().unwrap();
            let next = last.checked_mul(var.cardinality()).ok_or_else(|| {
                Error::InvalidConfig("event tree is too large to address".into())
            })?;
            widths.push(next);
        }
        Ok(EventTree { variables, widths })
    }

    /// Number of variables, which is also the depth of the leaves.
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, depth: usize) -> &VariableSpec {
        &self.variables[depth]
    }

    pub fn cardinality(&self, depth: usize) -> usize {
        self.variables[depth].cardinality()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// Number of vertices at `depth`; `depth == num_variables()` gives the leaves.
    pub fn width(&self, depth: usize) -> usize {
        self.widths[depth]
    }

    pub fn num_internal(&self) -> usize {
        self.widths[..self.variables.len()].iter().sum()
    }

    pub fn num_leaves(&self) -> usize {
        self.widths[self.variables.len()]
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.depth <= self.variables.len() && v.rank < self.widths[v.depth]
    }

    pub fn check_internal(&self, v: Vertex) -> Result<()> {
        if v.depth >= self.variables.len() || v.rank >= self.widths[v.depth] {
            return Err(Error::VertexOutOfRange {
                depth: v.depth,
                rank: v.rank,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn child(&self, v: Vertex, level: usize) -> Vertex {
        debug_assert!(level < self.cardinality(v.depth));
        Vertex {
            depth: v.depth + 1,
            rank: v.rank * self.cardinality(v.depth) + level,
        }
    }

    /// Ranks of the children of depth-`depth` vertex `rank`, ordered by level.
    #[inline]
    pub fn child_ranks(&self, depth: usize, rank: usize) -> std::ops::Range<usize> {
        let k = self.cardinality(depth);
        rank * k..rank * k + k
    }

    pub fn parent(&self, v: Vertex) -> Option<(Vertex, usize)> {
        if v.depth == 0 {
            return None;
        }
        let k = self.cardinality(v.depth - 1);
        Some((Vertex::new(v.depth - 1, v.rank / k), v.rank % k))
    }

    pub fn vertex_of_prefix(&self, prefix: &[usize]) -> Result<Vertex> {
        if prefix.len() > self.variables.len() {
            return Err(Error::InvalidData(format!(
                "prefix of length {} is longer than the tree",
                prefix.len()
            )));
        }
        let mut rank = 0usize;
        for (d, &x) in prefix.iter().enumerate() {
            let k = self.cardinality(d);
            if x >= k {
                return Err(Error::InvalidData(format!(
                    "level {x} out of range for `{}`",
                    self.variables[d].name
                )));
            }
            rank = rank * k + x;
        }
        Ok(Vertex::new(prefix.len(), rank))
    }

    pub fn prefix(&self, v: Vertex) -> Vec<usize> {
        let mut out = vec![0; v.depth];
        let mut rank = v.rank;
        for d in (0..v.depth).rev() {
            let k = self.cardinality(d);
            out[d] = rank % k;
            rank /= k;
        }
        out
    }

    /// Breadth-first index of a vertex (`v_0` is the root), the numbering used
    /// when drawing trees.
    pub fn bfs_index(&self, v: Vertex) -> usize {
        self.widths[..v.depth].iter().sum::<usize>() + v.rank
    }

    pub fn vertex_of_bfs_index(&self, index: usize) -> Option<Vertex> {
        let mut rest = index;
        for (depth, &w) in self.widths.iter().enumerate() {
            if rest < w {
                return Some(Vertex::new(depth, rest));
            }
            rest -= w;
        }
        None
    }
}
