//! Hyper-ensemble of random under-sampling models.
//!
//! Training draws `phi` independent balanced sub-samples of the training
//! set (all minority rows plus an equal-size random majority subset,
//! without replacement), fits one base model per draw, and predicts by
//! averaging the member probabilities. Repeated under-sampling exposes
//! more of the majority class than a single draw while keeping every
//! member balanced.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{fit, LearnerModel, LearnerSpec};
use crate::matrix::Matrix;
use crate::resample::under_sample_indices;
use crate::seed::derive_seed;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// An ordered collection of models trained on independent balanced
/// under-samples, predicting by averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperEnsemble {
    members: Vec<LearnerModel>,
    base_spec: LearnerSpec,
    /// Per-member under-sampling seeds, derived from the master seed.
    seeds: Vec<u64>,
    /// Balanced sub-sample size each member was trained on.
    member_train_rows: Vec<usize>,
}

impl HyperEnsemble {
    pub fn phi(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[LearnerModel] {
        &self.members
    }

    pub fn base_spec(&self) -> &LearnerSpec {
        &self.base_spec
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn member_train_rows(&self) -> &[usize] {
        &self.member_train_rows
    }

    pub fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    /// Builds an ensemble from existing members; handy for tests.
    pub fn from_members(members: Vec<LearnerModel>, base_spec: LearnerSpec) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyInput("ensemble members"));
        }
        let arity = members[0].n_features();
        if members.iter().any(|m| m.n_features() != arity) {
            return Err(Error::Invalid {
                what: "ensemble members",
                detail: "members disagree on feature arity".into(),
            });
        }
        let n = members.len();
        Ok(HyperEnsemble {
            members,
            base_spec,
            seeds: alloc::vec![0; n],
            member_train_rows: alloc::vec![0; n],
        })
    }

    /// Mean member probability for one row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for member in &self.members {
            sum += member.predict_row(row)?;
        }
        Ok(sum / self.members.len() as f64)
    }

    /// Mean member probabilities for every row of `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut sums = alloc::vec![0.0; x.n_rows()];
        for member in &self.members {
            let p = member.predict_proba(x)?;
            for (s, v) in sums.iter_mut().zip(p) {
                *s += v;
            }
        }
        let inv = 1.0 / self.members.len() as f64;
        for s in sums.iter_mut() {
            *s *= inv;
        }
        Ok(sums)
    }
}

/// Per-member derived seeds: slot 0 feeds the under-sampler, slot 1 the
/// learner. The single under-sampling strategy uses member index 0, so a
/// `phi = 1` ensemble reproduces it exactly under a shared master seed.
pub fn member_seeds(master_seed: u64, member: usize) -> (u64, u64) {
    (
        derive_seed(master_seed, 2 * member as u64),
        derive_seed(master_seed, 2 * member as u64 + 1),
    )
}

/// Trains a hyper-ensemble of `phi` members on independent balanced
/// under-samples of the training set.
pub fn train_hyper_ensemble(
    x: &Matrix,
    y: &[bool],
    phi: usize,
    base_spec: &LearnerSpec,
    master_seed: u64,
) -> Result<HyperEnsemble> {
    if phi == 0 {
        return Err(Error::Invalid {
            what: "phi",
            detail: "ensemble needs at least one member".into(),
        });
    }
    base_spec.validate()?;

    let train_member = |member: usize| -> Result<(LearnerModel, u64, usize)> {
        let (sample_seed, fit_seed) = member_seeds(master_seed, member);
        let keep = under_sample_indices(y, sample_seed)?;
        let x_sub = x.gather(&keep);
        let y_sub: Vec<bool> = keep.iter().map(|&i| y[i]).collect();
        let model = fit(&base_spec.with_seed(fit_seed), &x_sub, &y_sub, None)?;
        Ok((model, sample_seed, keep.len()))
    };

    #[cfg(feature = "parallel")]
    let trained: Result<Vec<(LearnerModel, u64, usize)>> =
        (0..phi).into_par_iter().map(train_member).collect();
    #[cfg(not(feature = "parallel"))]
    let trained: Result<Vec<(LearnerModel, u64, usize)>> = (0..phi).map(train_member).collect();

    let trained = trained?;
    let mut members = Vec::with_capacity(phi);
    let mut seeds = Vec::with_capacity(phi);
    let mut member_train_rows = Vec::with_capacity(phi);
    for (model, seed, rows) in trained {
        members.push(model);
        seeds.push(seed);
        member_train_rows.push(rows);
    }
    Ok(HyperEnsemble {
        members,
        base_spec: *base_spec,
        seeds,
        member_train_rows,
    })
}
