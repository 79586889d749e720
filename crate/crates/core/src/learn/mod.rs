//! Structure learning for staged trees.
//!
//! Fixed-order learners work on a [`CountTree`]; order-searching learners
//! work on a [`Dataset`]. Every learner is deterministic: hill-climbing takes
//! the steepest improving merge and breaks ties by the smallest pair of
//! group ids, where a group's id is its smallest vertex rank.

mod climb;
mod fixed;
mod order;

use std::fmt;
use std::str::FromStr;

pub use climb::closure_propagate;
pub use fixed::{learn_bhc, learn_marginal, learn_simplified_bhc, learn_total};
pub use order::{
    learn_exhaustive, learn_greedy_order_marginal, permutations, ExhaustiveOptions, InnerLearner,
    DEFAULT_MAX_EXHAUSTIVE_P,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{SimplexMode, StagedTree};
use crate::scoring::{count_paths, mle_parameters, CountTree};

/// A learned staged tree with the dataset column order it was learned
/// under and the BIC tracked by the search.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub model: StagedTree,
    pub order: Vec<usize>,
    pub bic: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Bhc,
    SimplifiedBhc,
    Marginal,
    Total,
    GreedyMarginal,
    AllMarginal,
    AllTotal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Bhc,
        Algorithm::SimplifiedBhc,
        Algorithm::Marginal,
        Algorithm::Total,
        Algorithm::GreedyMarginal,
        Algorithm::AllMarginal,
        Algorithm::AllTotal,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Bhc => "bhc",
            Algorithm::SimplifiedBhc => "simplified-bhc",
            Algorithm::Marginal => "marginal",
            Algorithm::Total => "total",
            Algorithm::GreedyMarginal => "greedy-marginal",
            Algorithm::AllMarginal => "all-marginal",
            Algorithm::AllTotal => "all-total",
        }
    }

    /// Whether the algorithm needs a variable order from the caller.
    pub fn needs_order(self) -> bool {
        matches!(
            self,
            Algorithm::Bhc | Algorithm::SimplifiedBhc | Algorithm::Marginal | Algorithm::Total
        )
    }

    /// Learner on counts for a fixed order, if this is a fixed-order algorithm.
    pub fn fixed_order_learner(self) -> Option<fn(&CountTree) -> Result<Fitted>> {
        match self {
            Algorithm::Bhc => Some(learn_bhc),
            Algorithm::SimplifiedBhc => Some(learn_simplified_bhc),
            Algorithm::Marginal => Some(learn_marginal),
            Algorithm::Total => Some(learn_total),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct LearnConfig {
    pub algorithm: Algorithm,
    /// Dataset column indices; required by fixed-order algorithms.
    pub order: Option<Vec<usize>>,
    /// Additive smoothing for the fitted parameters.
    pub alpha: f64,
    /// Reserved; the learners are deterministic.
    pub seed: u64,
    pub exhaustive: ExhaustiveOptions,
}

impl LearnConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        LearnConfig {
            algorithm,
            order: None,
            alpha: 0.0,
            seed: 0,
            exhaustive: ExhaustiveOptions::default(),
        }
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Self {
        self.order = Some(order);
        self
    }
}

/// Runs the configured learner and attaches fitted stage parameters.
pub fn learn(data: &Dataset, cfg: &LearnConfig) -> Result<Fitted> {
    let fit = match cfg.algorithm.fixed_order_learner() {
        Some(learner) => {
            let order = cfg.order.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("`{}` needs a variable order", cfg.algorithm))
            })?;
            learner(&count_paths(data, order)?)?
        }
        None => match cfg.algorithm {
            Algorithm::GreedyMarginal => learn_greedy_order_marginal(data)?,
            Algorithm::AllMarginal => learn_exhaustive(data, InnerLearner::Marginal, cfg.exhaustive)?,
            Algorithm::AllTotal => learn_exhaustive(data, InnerLearner::Total, cfg.exhaustive)?,
            _ => unreachable!("fixed-order algorithms handled above"),
        },
    };
    let counts = count_paths(data, &fit.order)?;
    let params = mle_parameters(&fit.model, &counts, cfg.alpha)?;
    let model = fit.model.with_params(params, SimplexMode::Closed)?;
    Ok(Fitted { model, ..fit })
}
