use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::VariableSpec;

/// Categorical observations: one level index per variable per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<VariableSpec>,
    cells: Vec<u32>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(variables: Vec<VariableSpec>, rows: &[Vec<usize>]) -> Result<Self> {
        let width = variables.len();
        let mut cells = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} cells, expected {width}",
                    row.len()
                )));
            }
            cells.extend(row.iter().map(|&x| x as u32));
        }
        Self::from_cells(variables, cells)
    }

    /// Row-major cells, `variables.len()` per row.
    pub fn from_cells(variables: Vec<VariableSpec>, cells: Vec<u32>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::NoVariables);
        }
        let mut names = HashSet::new();
        for v in &variables {
            v.validate()?;
            if !names.insert(v.name.as_str()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let width = variables.len();
        if !cells.len().is_multiple_of(width) {
            return Err(Error::InvalidData(format!(
                "{} cells do not fill rows of width {width}",
                cells.len()
            )));
        }
        for (i, &x) in cells.iter().enumerate() {
            let var = &variables[i % width];
            if x as usize >= var.cardinality() {
                return Err(Error::InvalidData(format!(
                    "row {}: level index {x} out of range for `{}`",
                    i / width,
                    var.name
                )));
            }
        }
        Ok(Dataset {
            n_rows: cells.len() / width,
            variables,
            cells,
        })
    }

    pub fn empty(variables: Vec<VariableSpec>) -> Result<Self> {
        Self::from_cells(variables, Vec::new())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let w = self.variables.len();
        &self.cells[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.cells.chunks_exact(self.variables.len())
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Column indices for a list of variable names; must name every variable
    /// exactly once.
    pub fn order_from_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let order = names
            .iter()
            .map(|n| {
                self.variable_index(n.as_ref())
                    .ok_or_else(|| Error::UnknownVariable(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        check_permutation(&order, self.n_vars())?;
        Ok(order)
    }

    /// Variables listed in `order`.
    pub fn ordered_variables(&self, order: &[usize]) -> Vec<VariableSpec> {
        order.iter().map(|&i| self.variables[i].clone()).collect()
    }

    /// Re-expresses the data over `target`: columns are matched by name and
    /// levels by label, so a file read with a different level order can be
    /// scored against a stored model.
    pub fn recode(&self, target: &[VariableSpec]) -> Result<Dataset> {
        let mut maps = Vec::with_capacity(target.len());
        let mut columns = Vec::with_capacity(target.len());
        for var in target {
            let col = self
                .variable_index(&var.name)
                .ok_or_else(|| Error::UnknownVariable(var.name.clone()))?;
            let map = self.variables[col]
                .levels
                .iter()
                .map(|l| {
                    var.level_index(l).map(|x| x as u32).ok_or_else(|| {
                        Error::InvalidData(format!(
                            "level `{l}` of `{}` is not part of the model",
                            var.name
                        ))
                    })
                })
                .collect::<Vec<_>>();
            columns.push(col);
            maps.push(map);
        }
        let mut cells = Vec::with_capacity(self.n_rows * target.len());
        for row in self.rows() {
            for (j, &col) in columns.iter().enumerate() {
                match &maps[j][row[col] as usize] {
                    Ok(x) => cells.push(*x),
                    Err(e) => return Err(Error::InvalidData(e.to_string())),
                }
            }
        }
        Dataset::from_cells(target.to_vec(), cells)
    }
}

pub(crate) fn check_permutation(order: &[usize], p: usize) -> Result<()> {
    if order.len() != p {
        return Err(Error::InvalidOrder(format!(
            "order has {} entries for {p} variables",
            order.len()
        )));
    }
    let mut seen = vec![false; p];
    for &i in order {
        if i >= p || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidOrder(format!(
                "{order:?} is not a permutation of 0..{p}"
            )));
        }
    }
    Ok(())
}
