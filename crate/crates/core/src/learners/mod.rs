//! Base learners: random forest, AdaBoost, and L1/L2 logistic regression,
//! plus cost-sensitive weighting and cross-validated model selection.
//!
//! Every learner returns a probability score in [0, 1] so predictions can
//! be sorted into hotspot rankings. Fitting is deterministic for a fixed
//! spec, seed, and data.

pub mod boost;
pub mod cv;
pub mod forest;
pub mod logistic;
pub mod tree;

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use boost::{AdaBoostModel, AdaBoostParams};
pub use cv::{cross_validate, kfold_indices, CvData, CvOutcome, FoldPrep};
pub use forest::{ForestModel, ForestParams};
pub use logistic::{penalized_loss_grad, LogisticModel, LogisticParams, Penalty};
pub use tree::{DecisionTree, TreeParams};

/// Algorithm family plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Algo {
    Forest(ForestParams),
    AdaBoost(AdaBoostParams),
    Logistic(LogisticParams),
}

/// A fully specified learner: algorithm, hyperparameters, and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub algo: Algo,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(algo: Algo, seed: u64) -> Self {
        LearnerSpec { algo, seed }
    }

    /// Same spec with a different seed; used to derive ensemble members.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.algo {
            Algo::Forest(p) => p.validate(),
            Algo::AdaBoost(p) => p.validate(),
            Algo::Logistic(p) => p.validate(),
        }
    }
}

/// A fitted model of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LearnerModel {
    Forest(ForestModel),
    AdaBoost(AdaBoostModel),
    Logistic(LogisticModel),
}

impl LearnerModel {
    pub fn n_features(&self) -> usize {
        match self {
            LearnerModel::Forest(m) => m.n_features(),
            LearnerModel::AdaBoost(m) => m.n_features(),
            LearnerModel::Logistic(m) => m.n_features(),
        }
    }

    /// Probability score for one feature row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(match self {
            LearnerModel::Forest(m) => m.predict_row(row),
            LearnerModel::AdaBoost(m) => m.predict_row(row),
            LearnerModel::Logistic(m) => m.predict_row(row),
        })
    }

    /// Probability scores for every row of `x`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                got: x.n_cols(),
            });
        }
        Ok((0..x.n_rows())
            .map(|i| match self {
                LearnerModel::Forest(m) => m.predict_row(x.row(i)),
                LearnerModel::AdaBoost(m) => m.predict_row(x.row(i)),
                LearnerModel::Logistic(m) => m.predict_row(x.row(i)),
            })
            .collect())
    }
}

/// Fits a learner. `weights`, when given, scale each row's influence
/// (trees through the weighted Gini impurity, logistic through the
/// weighted log-loss, boosting through the initial distribution).
pub fn fit(
    spec: &LearnerSpec,
    x: &Matrix,
    y: &[bool],
    weights: Option<&[f64]>,
) -> Result<LearnerModel> {
    spec.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::ArityMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::Invalid {
            what: "training set",
            detail: "need at least 2 rows".into(),
        });
    }
    let positives = y.iter().filter(|&&b| b).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass("training labels"));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("training features"));
    }
    let owned;
    let weights = match weights {
        Some(w) => {
            if w.len() != y.len() {
                return Err(Error::ArityMismatch {
                    expected: y.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NonFinite("sample weights"));
            }
            if w.iter().all(|&v| v == 0.0) {
                return Err(Error::Invalid {
                    what: "sample weights",
                    detail: "must not all be zero".into(),
                });
            }
            w
        }
        None => {
            owned = alloc::vec![1.0; y.len()];
            &owned
        }
    };

    Ok(match &spec.algo {
        Algo::Forest(p) => LearnerModel::Forest(forest::fit_forest(x, y, weights, p, spec.seed)?),
        Algo::AdaBoost(p) => {
            LearnerModel::AdaBoost(boost::fit_adaboost(x, y, weights, p, spec.seed)?)
        }
        Algo::Logistic(p) => LearnerModel::Logistic(logistic::fit_logistic(x, y, weights, p)?),
    })
}

/// Cost-sensitive sample weights: majority rows weigh 1, minority rows
/// weigh majority/minority, so total class influence balances.
pub fn cost_weights(y: &[bool]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let positives = y.iter().filter(|&&b| b).count();
    let negatives = y.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass("labels"));
    }
    let (minority_label, ratio) = if positives <= negatives {
        (true, negatives as f64 / positives as f64)
    } else {
        (false, positives as f64 / negatives as f64)
    };
    Ok(y.iter()
        .map(|&b| if b == minority_label { ratio } else { 1.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_seed;

    fn blob_data(n: usize) -> (Matrix, Vec<bool>) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = if i % 4 == 0 { 2.0 } else { -2.0 };
                vec![c + ((i * 7) % 5) as f64 * 0.1, ((i * 3) % 4) as f64]
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let y = (0..n).map(|i| i % 4 == 0).collect();
        (Matrix::from_rows(&refs).unwrap(), y)
    }

    #[test]
    fn cost_weights_ratio() {
        let y = [true, true, false, false, false, false, false, false, false, false];
        let w = cost_weights(&y).unwrap();
        assert_eq!(w[0], 4.0);
        assert_eq!(w[2], 1.0);
    }

    #[test]
    fn cost_weights_reference_scale() {
        // 6,266 positives against 11,117,038 negatives
        let negatives = 11_123_304usize - 6_266;
        let ratio = negatives as f64 / 6_266.0;
        assert!((ratio - 1774.18).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn cost_weights_balanced_all_one() {
        let y = [true, false, true, false];
        assert_eq!(cost_weights(&y).unwrap(), vec![1.0; 4]);
        assert!(cost_weights(&[true, true]).is_err());
        assert!(cost_weights(&[]).is_err());
    }

    #[test]
    fn fit_rejects_bad_input() {
        let (x, y) = blob_data(8);
        let spec = LearnerSpec::new(Algo::Forest(ForestParams::default()), 0);
        assert!(fit(&spec, &x, &vec![true; 8], None).is_err());
        assert!(fit(&spec, &x, &y[..4].to_vec(), None).is_err());
        assert!(fit(&spec, &x, &y, Some(&alloc::vec![0.0; 8])).is_err());
        let mut bad = x.clone();
        bad.row_mut(0)[0] = f64::NAN;
        assert!(fit(&spec, &bad, &y, None).is_err());
    }

    #[test]
    fn predict_checks_arity() {
        let (x, y) = blob_data(12);
        let spec = LearnerSpec::new(
            Algo::Logistic(LogisticParams::new(Penalty::L2, 0.1)),
            derive_seed(1, 0),
        );
        let model = fit(&spec, &x, &y, None).unwrap();
        assert!(model.predict_row(&[1.0]).is_err());
        let p = model.predict_proba(&x).unwrap();
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn deterministic_given_spec_and_seed() {
        let (x, y) = blob_data(24);
        for algo in [
            Algo::Forest(ForestParams {
                n_trees: 8,
                max_depth: Some(4),
                ..ForestParams::default()
            }),
            Algo::AdaBoost(AdaBoostParams::default()),
            Algo::Logistic(LogisticParams::new(Penalty::L1, 0.01)),
        ] {
            let spec = LearnerSpec::new(algo, 99);
            let a = fit(&spec, &x, &y, None).unwrap();
            let b = fit(&spec, &x, &y, None).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn raising_minority_weight_raises_high_scores() {
        let (x, y) = blob_data(40);
        let spec = LearnerSpec::new(Algo::Logistic(LogisticParams::new(Penalty::L2, 0.01)), 7);
        let mut counts = Vec::new();
        for boost in [1.0, 4.0, 16.0, 64.0] {
            let w: Vec<f64> = y.iter().map(|&b| if b { boost } else { 1.0 }).collect();
            let model = fit(&spec, &x, &y, Some(&w)).unwrap();
            let over_half = model
                .predict_proba(&x)
                .unwrap()
                .iter()
                .filter(|&&p| p > 0.5)
                .count();
            counts.push(over_half);
        }
        for pair in counts.windows(2) {
            assert!(pair[1] >= pair[0], "counts not monotone: {counts:?}");
        }
    }
}
