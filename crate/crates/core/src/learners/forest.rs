//! Random forest of CART trees with soft-vote probabilities.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};

use super::tree::{fit_tree, DecisionTree, TreeParams};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Bootstrap row sampling per tree.
    pub bootstrap: bool,
    /// Sample ceil(sqrt(d)) candidate features per split.
    pub feature_subsample: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            feature_subsample: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Invalid {
                what: "n_trees",
                detail: "must be at least 1".into(),
            });
        }
        if self.max_depth == Some(0) {
            return Err(Error::Invalid {
                what: "max_depth",
                detail: "must be at least 1 (or unlimited)".into(),
            });
        }
        Ok(())
    }
}

/// A fitted forest; the predicted probability is the mean of the per-tree
/// leaf positive-class frequencies (soft vote), which gives the ranking a
/// finer score resolution than a hard mode vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    n_features: usize,
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Builds a forest directly from trees; handy for tests.
    pub fn from_trees(trees: Vec<DecisionTree>, n_features: usize) -> Self {
        ForestModel { trees, n_features }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }
}

pub(crate) fn fit_forest(
    x: &Matrix,
    y: &[bool],
    weights: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    let n = x.n_rows();
    let subsample = if params.feature_subsample {
        let d = x.n_cols() as f64;
        Some((libm::ceil(libm::sqrt(d)) as usize).max(1))
    } else {
        None
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: subsample,
    };

    let grow = |t: usize| -> DecisionTree {
        let mut rng = rng_from_seed(derive_seed(seed, t as u64));
        let mut indices: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        fit_tree(x, y, weights, &mut indices, &tree_params, &mut rng)
    };

    #[cfg(feature = "parallel")]
    let trees: Vec<DecisionTree> = (0..params.n_trees).into_par_iter().map(grow).collect();
    #[cfg(not(feature = "parallel"))]
    let trees: Vec<DecisionTree> = (0..params.n_trees).map(grow).collect();

    Ok(ForestModel {
        trees,
        n_features: x.n_cols(),
    })
}
