//! Discrete AdaBoost over shallow CART trees.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

use super::logistic::sigmoid;
use super::tree::{fit_tree, DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// Depth of each weak tree; 1 gives classic decision stumps.
    pub weak_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_rounds: 50,
            learning_rate: 1.0,
            weak_depth: 1,
        }
    }
}

impl AdaBoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::Invalid {
                what: "n_rounds",
                detail: "must be at least 1".into(),
            });
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Invalid {
                what: "learning_rate",
                detail: "must be positive and finite".into(),
            });
        }
        if self.weak_depth == 0 {
            return Err(Error::Invalid {
                what: "weak_depth",
                detail: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub alpha: f64,
    /// Weighted error of the weak tree on its round's distribution.
    pub error: f64,
    pub tree: DecisionTree,
}

/// A fitted boosting ensemble. The probability is a logistic transform of
/// the normalized weighted margin, monotone in the raw margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    rounds: Vec<BoostRound>,
    n_features: usize,
}

impl AdaBoostModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn rounds(&self) -> &[BoostRound] {
        &self.rounds
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut margin = 0.0;
        let mut alpha_sum = 0.0;
        for round in &self.rounds {
            let vote = if round.tree.predict_row(row) >= 0.5 {
                1.0
            } else {
                -1.0
            };
            margin += round.alpha * vote;
            alpha_sum += round.alpha;
        }
        if alpha_sum == 0.0 {
            0.5
        } else {
            sigmoid(2.0 * margin / alpha_sum)
        }
    }
}

pub(crate) fn fit_adaboost(
    x: &Matrix,
    y: &[bool],
    weights: &[f64],
    params: &AdaBoostParams,
    seed: u64,
) -> Result<AdaBoostModel> {
    params.validate()?;
    let n = x.n_rows();
    let mut rng = rng_from_seed(seed);

    // boosting distribution, seeded from the sample weights
    let total: f64 = weights.iter().sum();
    let mut dist: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let tree_params = TreeParams {
        max_depth: Some(params.weak_depth),
        min_samples_split: 2,
        min_samples_leaf: 1,
        features_per_split: None,
    };

    let mut rounds = Vec::new();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut votes = vec![false; n];
    for _ in 0..params.n_rounds {
        indices.clear();
        indices.extend(0..n);
        let tree = fit_tree(x, y, &dist, &mut indices, &tree_params, &mut rng);

        let mut error = 0.0;
        for i in 0..n {
            votes[i] = tree.predict_row(x.row(i)) >= 0.5;
            if votes[i] != y[i] {
                error += dist[i];
            }
        }

        // a weak learner no better than chance on its distribution ends
        // the boosting loop
        if error >= 0.5 {
            log::debug!("boosting stopped: weighted error {error:.4} >= 0.5");
            break;
        }
        let clamped = error.max(1e-12);
        let alpha = params.learning_rate * 0.5 * libm::log((1.0 - clamped) / clamped);
        rounds.push(BoostRound { alpha, error, tree });
        if error == 0.0 {
            break;
        }

        let mut sum = 0.0;
        for i in 0..n {
            let sign = if votes[i] == y[i] { -alpha } else { alpha };
            dist[i] *= libm::exp(sign);
            sum += dist[i];
        }
        for d in dist.iter_mut() {
            *d /= sum;
        }
    }

    Ok(AdaBoostModel {
        rounds,
        n_features: x.n_cols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Matrix, Vec<bool>) {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * 7 % 10) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let y = (0..10).map(|i| i >= 5).collect();
        (Matrix::from_rows(&refs).unwrap(), y)
    }

    #[test]
    fn every_round_error_is_below_half() {
        let (x, y) = separable();
        let weights = vec![1.0; 10];
        let params = AdaBoostParams {
            n_rounds: 20,
            ..AdaBoostParams::default()
        };
        let model = fit_adaboost(&x, &y, &weights, &params, 5).unwrap();
        assert!(!model.rounds().is_empty());
        for round in model.rounds() {
            assert!(round.error < 0.5, "round error {}", round.error);
            assert!(round.alpha > 0.0);
        }
    }

    #[test]
    fn separable_data_reaches_perfect_training_accuracy() {
        let (x, y) = separable();
        let weights = vec![1.0; 10];
        let model = fit_adaboost(&x, &y, &weights, &AdaBoostParams::default(), 5).unwrap();
        for i in 0..10 {
            assert_eq!(model.predict_row(x.row(i)) > 0.5, y[i]);
        }
    }

    #[test]
    fn xor_with_stumps_yields_chance_output() {
        // no stump beats 0.5 weighted error on XOR, so boosting stops with
        // an empty ensemble and the prediction falls back to 0.5
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = vec![false, true, true, false];
        let weights = vec![1.0; 4];
        let model = fit_adaboost(&x, &y, &weights, &AdaBoostParams::default(), 1).unwrap();
        assert!(model.rounds().is_empty());
        assert_eq!(model.predict_row(&[0.0, 0.0]), 0.5);
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let (x, y) = separable();
        let weights = vec![1.0; 10];
        let model = fit_adaboost(&x, &y, &weights, &AdaBoostParams::default(), 9).unwrap();
        for i in 0..10 {
            let p = model.predict_row(x.row(i));
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
