//! 5-fold cross-validated hyperparameter selection.
//!
//! Folds are random row partitions; the chronological guard applies only
//! at the train/test boundary upstream, never inside the training window.
//! Each candidate is scored by the mean validation surveillance AUC and
//! the best index wins, ties going to the earlier candidate.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{default_curve_grid, grouped_surveillance_auc};
use crate::seed::{derive_seed, rng_from_seed};

use super::{fit, LearnerSpec};

/// Training rows for model selection: features, labels, and the global
/// time bucket of each row (for day-grouped ranking scores).
#[derive(Debug, Clone, Copy)]
pub struct CvData<'a> {
    pub x: &'a Matrix,
    pub y: &'a [bool],
    pub buckets: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Index of the winning spec in the candidate list.
    pub best: usize,
    /// Mean validation score per candidate.
    pub mean_scores: Vec<f64>,
}

/// Transform applied to each fold's training part before fitting
/// (resampling, cost weighting). Validation rows are never touched.
///
/// Arguments are the fold-train features, labels, and a per-fold seed;
/// the result is the data to fit on plus optional sample weights.
pub type FoldPrep<'a> =
    &'a dyn Fn(&Matrix, &[bool], u64) -> crate::error::Result<(Matrix, Vec<bool>, Option<Vec<f64>>)>;

/// Shuffled partition of `0..n` into `folds` blocks with sizes differing
/// by at most one.
pub fn kfold_indices(n: usize, folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(order[at..at + size].to_vec());
        at += size;
    }
    out
}

fn fold_has_both_classes(fold: &[usize], y: &[bool]) -> bool {
    fold.iter().any(|&i| y[i]) && fold.iter().any(|&i| !y[i])
}

/// Selects the best spec by `folds`-fold cross-validation on the given
/// training rows, scored by surveillance AUC on each validation fold.
///
/// Fold partitions are redrawn (up to a fixed retry budget) until every
/// fold holds both classes; inputs too skewed to ever satisfy that are
/// rejected. Ties keep the lowest candidate index. `prep`, when given,
/// transforms each fold's training part (resampling or cost weighting)
/// with the same per-fold seed across candidates, so the comparison
/// stays paired.
pub fn cross_validate(
    specs: &[LearnerSpec],
    data: CvData<'_>,
    folds: usize,
    seed: u64,
    prep: Option<FoldPrep<'_>>,
) -> Result<CvOutcome> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("spec grid"));
    }
    let n = data.y.len();
    if data.x.n_rows() != n || data.buckets.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: data.x.n_rows().min(data.buckets.len()),
        });
    }
    if folds < 2 || folds > n {
        return Err(Error::Invalid {
            what: "folds",
            detail: "need 2 <= folds <= rows".into(),
        });
    }
    let positives = data.y.iter().filter(|&&b| b).count();
    if positives < folds || n - positives < folds {
        return Err(Error::Invalid {
            what: "training set",
            detail: "too few rows of one class to give every fold both classes".into(),
        });
    }

    const MAX_REDRAWS: u64 = 100;
    let mut partition = None;
    for attempt in 0..MAX_REDRAWS {
        let mut rng = rng_from_seed(derive_seed(seed, attempt));
        let candidate = kfold_indices(n, folds, &mut rng);
        if candidate.iter().all(|f| fold_has_both_classes(f, data.y)) {
            partition = Some(candidate);
            break;
        }
    }
    let partition = partition.ok_or(Error::Invalid {
        what: "cross-validation folds",
        detail: "could not draw folds with both classes everywhere".into(),
    })?;

    let grid = default_curve_grid();
    let mut mean_scores = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut total = 0.0;
        for (fold_idx, fold) in partition.iter().enumerate() {
            let mut train_rows: Vec<usize> = Vec::with_capacity(n - fold.len());
            let mut in_fold = alloc::vec![false; n];
            for &i in fold {
                in_fold[i] = true;
            }
            train_rows.extend((0..n).filter(|&i| !in_fold[i]));

            let x_train = data.x.gather(&train_rows);
            let y_train: Vec<bool> = train_rows.iter().map(|&i| data.y[i]).collect();
            let model = match prep {
                Some(prep) => {
                    let fold_seed = derive_seed(seed, 1_000 + fold_idx as u64);
                    let (x_prep, y_prep, w_prep) = prep(&x_train, &y_train, fold_seed)?;
                    fit(spec, &x_prep, &y_prep, w_prep.as_deref())?
                }
                None => fit(spec, &x_train, &y_train, None)?,
            };

            let x_val = data.x.gather(fold);
            let scores = model.predict_proba(&x_val)?;
            let y_val: Vec<bool> = fold.iter().map(|&i| data.y[i]).collect();
            let b_val: Vec<usize> = fold.iter().map(|&i| data.buckets[i]).collect();
            total += grouped_surveillance_auc(&scores, &y_val, &b_val, &grid)?;
        }
        mean_scores.push(total / folds as f64);
    }

    let mut best = 0;
    for (i, &s) in mean_scores.iter().enumerate() {
        if s > mean_scores[best] {
            best = i;
        }
    }
    Ok(CvOutcome { best, mean_scores })
}
