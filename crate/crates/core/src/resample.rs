//! Data-level class-imbalance strategies: random under-/over-sampling,
//! SMOTE, and NearMiss.
//!
//! All four transforms return exactly balanced classes. Distance-based
//! heuristics (SMOTE neighbor search, NearMiss retention) work on
//! z-scored copies of the input so count-valued columns do not dominate;
//! emitted rows keep the original raw scale. Every routine is
//! deterministic for a fixed seed.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;
use rand::seq::SliceRandom;
use rand::Rng;

/// The four data-level strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResampleMethod {
    RandomUnder,
    RandomOver,
    Smote,
    NearMiss,
}

/// Method plus the parameters shared by the heuristic variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub method: ResampleMethod,
    /// Neighbor count for SMOTE and NearMiss.
    pub k_neighbors: usize,
    pub seed: u64,
}

impl ResampleSpec {
    pub fn new(method: ResampleMethod, seed: u64) -> Self {
        ResampleSpec {
            method,
            k_neighbors: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::Invalid {
                what: "k_neighbors",
                detail: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Applies the configured method.
    pub fn apply(&self, x: &Matrix, y: &[bool]) -> Result<(Matrix, Vec<bool>)> {
        self.validate()?;
        match self.method {
            ResampleMethod::RandomUnder => random_under_sample(x, y, self.seed),
            ResampleMethod::RandomOver => random_over_sample(x, y, self.seed),
            ResampleMethod::Smote => smote(x, y, self.k_neighbors, self.seed, false),
            ResampleMethod::NearMiss => near_miss(x, y, self.k_neighbors),
        }
    }
}

fn split_classes(x: &Matrix, y: &[bool]) -> Result<(Vec<usize>, Vec<usize>)> {
    if y.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::ArityMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("cannot balance a single-class input"));
    }
    Ok((pos, neg))
}

/// Minority and majority index lists, in that order.
fn minority_majority(pos: Vec<usize>, neg: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    }
}

/// Row indices kept by random under-sampling: every minority row plus a
/// uniform without-replacement draw of the majority, in original row order.
pub fn under_sample_indices(y: &[bool], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass("cannot balance a single-class input"));
    }
    let (minority, mut majority) = minority_majority(pos, neg);
    let mut rng = rng_from_seed(seed);
    let (sampled, _) = majority.partial_shuffle(&mut rng, minority.len());
    let mut keep: Vec<usize> = minority.iter().chain(sampled.iter()).copied().collect();
    keep.sort_unstable();
    Ok(keep)
}

/// Random under-sampling: draws majority rows without replacement until
/// both classes have the minority count.
pub fn random_under_sample(x: &Matrix, y: &[bool], seed: u64) -> Result<(Matrix, Vec<bool>)> {
    split_classes(x, y)?;
    let keep = under_sample_indices(y, seed)?;
    let labels = keep.iter().map(|&i| y[i]).collect();
    Ok((x.gather(&keep), labels))
}

/// Random over-sampling: duplicates uniformly drawn minority rows until
/// both classes have the majority count. Majority rows are untouched and
/// every synthetic row is an exact copy of a minority row.
pub fn random_over_sample(x: &Matrix, y: &[bool], seed: u64) -> Result<(Matrix, Vec<bool>)> {
    let (pos, neg) = split_classes(x, y)?;
    let (minority, majority) = minority_majority(pos, neg);
    let mut rng = rng_from_seed(seed);
    let mut indices: Vec<usize> = (0..y.len()).collect();
    for _ in 0..majority.len() - minority.len() {
        indices.push(minority[rng.gen_range(0..minority.len())]);
    }
    let labels = indices.iter().map(|&i| y[i]).collect();
    Ok((x.gather(&indices), labels))
}

/// Standardized copies of the given rows, for distance computations only.
fn standardized_rows(x: &Matrix, rows: &[usize]) -> (Matrix, Vec<f64>, Vec<f64>) {
    let (means, stds) = x.column_stats();
    let mut out = Matrix::zeros(rows.len(), x.n_cols());
    for (oi, &i) in rows.iter().enumerate() {
        let src = x.row(i);
        let dst = out.row_mut(oi);
        for j in 0..src.len() {
            dst[j] = (src[j] - means[j]) / stds[j];
        }
    }
    (out, means, stds)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Indices (into `z`) of the `k` nearest rows to row `i`, self excluded,
/// ties broken by lower index.
fn k_nearest(z: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut dists: Vec<(f64, usize)> = (0..z.n_rows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(z.row(i), z.row(j)), j))
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dists.truncate(k);
    dists.into_iter().map(|(_, j)| j).collect()
}

/// SMOTE: synthesize minority points on segments between each minority
/// point and one of its `k` nearest minority neighbors until the classes
/// balance.
///
/// Each synthetic point is `p + t (r - p)` with `t ~ Uniform[0, 1]` and
/// `r` drawn among the `k` nearest minority neighbors of `p` (Euclidean on
/// z-scored features). Minority points are cycled in order so generation
/// spreads evenly. With a single minority row there is no segment to
/// interpolate: non-strict mode falls back to random over-sampling with a
/// warning, strict mode errors.
pub fn smote(
    x: &Matrix,
    y: &[bool],
    k: usize,
    seed: u64,
    strict: bool,
) -> Result<(Matrix, Vec<bool>)> {
    if k == 0 {
        return Err(Error::Invalid {
            what: "k_neighbors",
            detail: "must be at least 1".into(),
        });
    }
    let (pos, neg) = split_classes(x, y)?;
    let (minority, majority) = minority_majority(pos, neg);
    if minority.len() < 2 {
        if strict {
            return Err(Error::Invalid {
                what: "minority class",
                detail: "SMOTE needs at least 2 minority rows in strict mode".into(),
            });
        }
        log::warn!("SMOTE: single minority row; falling back to random over-sampling");
        return random_over_sample(x, y, seed);
    }

    let (z, _, _) = standardized_rows(x, &minority);
    let k_eff = k.min(minority.len() - 1);
    let neighbors: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| k_nearest(&z, i, k_eff))
        .collect();

    let minority_label = y[minority[0]];
    let n_synthetic = majority.len() - minority.len();
    let mut rng = rng_from_seed(seed);

    let mut out_x = x.clone();
    let mut out_y = y.to_vec();
    let mut row = vec![0.0; x.n_cols()];
    for s in 0..n_synthetic {
        let pi = s % minority.len();
        let ri = neighbors[pi][rng.gen_range(0..k_eff)];
        let t: f64 = rng.gen();
        interpolate(x.row(minority[pi]), x.row(minority[ri]), t, &mut row);
        out_x.push_row(&row)?;
        out_y.push(minority_label);
    }
    Ok((out_x, out_y))
}

/// Writes `p + t (r - p)` into `out`.
pub fn interpolate(p: &[f64], r: &[f64], t: f64, out: &mut [f64]) {
    for ((o, &a), &b) in out.iter_mut().zip(p).zip(r) {
        *o = a + t * (b - a);
    }
}

/// NearMiss under-sampling: retains the minority-count majority rows with
/// the smallest mean Euclidean distance (on z-scored features) to their
/// `k` nearest minority points.
///
/// The minority class is the positive class here; a negative class smaller
/// than the positive one is rejected. `k` is truncated to the minority
/// size; ties break by lowest original row index, so the result is
/// deterministic.
pub fn near_miss(x: &Matrix, y: &[bool], k: usize) -> Result<(Matrix, Vec<bool>)> {
    if k == 0 {
        return Err(Error::Invalid {
            what: "k_neighbors",
            detail: "must be at least 1".into(),
        });
    }
    let (minority, majority) = split_classes(x, y)?;
    if majority.len() < minority.len() {
        return Err(Error::Invalid {
            what: "near_miss input",
            detail: "majority (negative) class smaller than minority (positive) class".into(),
        });
    }

    let all: Vec<usize> = minority.iter().chain(majority.iter()).copied().collect();
    let (z, _, _) = standardized_rows(x, &all);
    let m = minority.len();
    let k_eff = k.min(m);

    // mean distance of each majority row to its k nearest minority rows
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(majority.len());
    let mut dists: Vec<f64> = vec![0.0; m];
    for (mj, &row) in majority.iter().enumerate() {
        let zr = z.row(m + mj);
        for (mi, d) in dists.iter_mut().enumerate() {
            *d = libm::sqrt(squared_distance(zr, z.row(mi)));
        }
        dists.sort_by(|a, b| a.total_cmp(b));
        let mean = dists[..k_eff].iter().sum::<f64>() / k_eff as f64;
        scored.push((mean, row));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut keep: Vec<usize> = minority
        .iter()
        .copied()
        .chain(scored[..m].iter().map(|&(_, row)| row))
        .collect();
    keep.sort_unstable();
    let labels = keep.iter().map(|&i| y[i]).collect();
    Ok((x.gather(&keep), labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(pos: usize, neg: usize) -> (Matrix, Vec<bool>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..pos {
            rows.push(vec![i as f64, 1.0]);
            y.push(true);
        }
        for i in 0..neg {
            rows.push(vec![i as f64 + 100.0, 0.0]);
            y.push(false);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        (Matrix::from_rows(&refs).unwrap(), y)
    }

    fn counts(y: &[bool]) -> (usize, usize) {
        let p = y.iter().filter(|&&b| b).count();
        (p, y.len() - p)
    }

    #[test]
    fn under_sampling_balances_and_keeps_minority() {
        let (x, y) = toy(3, 7);
        let (xr, yr) = random_under_sample(&x, &y, 7).unwrap();
        assert_eq!(yr.len(), 6);
        assert_eq!(counts(&yr), (3, 3));
        // all minority rows retained
        for i in 0..3 {
            assert!(
                (0..xr.n_rows()).any(|r| xr.row(r) == x.row(i)),
                "minority row {i} missing"
            );
        }
        // majority rows are a subset of the input
        for r in 0..xr.n_rows() {
            assert!((0..x.n_rows()).any(|i| x.row(i) == xr.row(r)));
        }
    }

    #[test]
    fn under_sampling_balanced_input_is_identity() {
        let (x, y) = toy(5, 5);
        let (xr, yr) = random_under_sample(&x, &y, 1).unwrap();
        assert_eq!(xr, x);
        assert_eq!(yr, y);
    }

    #[test]
    fn single_class_errors() {
        let (x, _) = toy(3, 3);
        let y = vec![true; 6];
        assert!(matches!(
            random_under_sample(&x, &y, 0),
            Err(Error::SingleClass(_))
        ));
        assert!(random_over_sample(&x, &y, 0).is_err());
        assert!(smote(&x, &y, 3, 0, false).is_err());
        assert!(near_miss(&x, &y, 3).is_err());
    }

    #[test]
    fn over_sampling_duplicates_minority_exactly() {
        let (x, y) = toy(2, 6);
        let (xr, yr) = random_over_sample(&x, &y, 11).unwrap();
        assert_eq!(yr.len(), 12);
        assert_eq!(counts(&yr), (6, 6));
        // every synthetic positive row is a copy of one of the two originals
        for r in 0..xr.n_rows() {
            if yr[r] {
                assert!(xr.row(r) == x.row(0) || xr.row(r) == x.row(1));
            }
        }
        // majority untouched, in original order
        let neg_rows: Vec<&[f64]> = (0..xr.n_rows()).filter(|&r| !yr[r]).map(|r| xr.row(r)).collect();
        let orig_neg: Vec<&[f64]> = (0..x.n_rows()).filter(|&r| !y[r]).map(|r| x.row(r)).collect();
        assert_eq!(neg_rows, orig_neg);
    }

    #[test]
    fn over_sampling_single_positive_appears_majority_times() {
        let (x, y) = toy(1, 4);
        let (xr, yr) = random_over_sample(&x, &y, 3).unwrap();
        assert_eq!(yr.len(), 8);
        let copies = (0..xr.n_rows())
            .filter(|&r| yr[r] && xr.row(r) == x.row(0))
            .count();
        assert_eq!(copies, 4);
    }

    #[test]
    fn smote_midpoint_on_two_point_minority() {
        // with two minority points every synthetic lies on their segment,
        // which here is the diagonal x = y scaled by 2
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![2.0, 2.0],
            vec![10.0, 0.0],
            vec![11.0, 0.0],
            vec![12.0, 0.0],
            vec![13.0, 0.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = vec![true, true, false, false, false, false];
        let (xr, yr) = smote(&x, &y, 3, 5, false).unwrap();
        assert_eq!(counts(&yr), (4, 4));
        for r in 6..xr.n_rows() {
            let s = xr.row(r);
            assert!((s[0] - s[1]).abs() < 1e-12, "not on the segment: {s:?}");
            assert!((0.0..=2.0).contains(&s[0]));
        }
        // forced t = 0.5 interpolation is the midpoint
        let mut mid = [0.0; 2];
        interpolate(&[0.0, 0.0], &[2.0, 2.0], 0.5, &mut mid);
        assert_eq!(mid, [1.0, 1.0]);
    }

    #[test]
    fn smote_collinear_minority_stays_collinear() {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![50.0, 0.0],
            vec![51.0, 0.0],
            vec![52.0, 0.0],
            vec![53.0, 0.0],
            vec![54.0, 0.0],
            vec![55.0, 0.0],
            vec![56.0, 0.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = vec![
            true, true, true, false, false, false, false, false, false, false,
        ];
        let (xr, yr) = smote(&x, &y, 3, 9, false).unwrap();
        assert_eq!(counts(&yr), (7, 7));
        for r in 10..xr.n_rows() {
            let s = xr.row(r);
            // all minority points satisfy y = 2x
            assert!((s[1] - 2.0 * s[0]).abs() < 1e-9, "off the line: {s:?}");
        }
    }

    #[test]
    fn smote_single_minority_falls_back_or_errors() {
        let (x, y) = toy(1, 4);
        let (xr, yr) = smote(&x, &y, 3, 2, false).unwrap();
        assert_eq!(counts(&yr), (4, 4));
        for r in 0..xr.n_rows() {
            if yr[r] {
                assert_eq!(xr.row(r), x.row(0));
            }
        }
        assert!(smote(&x, &y, 3, 2, true).is_err());
    }

    #[test]
    fn near_miss_retains_closest_majority() {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![5.0, 0.0],
            vec![9.0, 0.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = vec![true, false, false, false];
        let (xr, yr) = near_miss(&x, &y, 3).unwrap();
        assert_eq!(counts(&yr), (1, 1));
        assert!((0..xr.n_rows()).any(|r| xr.row(r) == [1.0, 0.0]));
    }

    #[test]
    fn near_miss_all_tied_breaks_by_index() {
        // minority {(0,0), (10,0)}, majority {(1,0), (5,0), (9,0)}, k = 2:
        // every majority point has mean distance 5 to the two minority
        // points, so the tie-break keeps the two lowest-index rows
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![10.0, 0.0],
            vec![1.0, 0.0],
            vec![5.0, 0.0],
            vec![9.0, 0.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = vec![true, true, false, false, false];
        let (xr, yr) = near_miss(&x, &y, 2).unwrap();
        assert_eq!(counts(&yr), (2, 2));
        let kept: Vec<&[f64]> = (0..xr.n_rows()).filter(|&r| !yr[r]).map(|r| xr.row(r)).collect();
        assert_eq!(kept, vec![&[1.0, 0.0][..], &[5.0, 0.0][..]]);
    }

    #[test]
    fn near_miss_majority_smaller_than_minority_errors() {
        let (x, y) = toy(4, 2);
        assert!(matches!(
            near_miss(&x, &y, 3),
            Err(Error::Invalid { what: "near_miss input", .. })
        ));
        let (x, y) = toy(2, 2);
        let (_, yr) = near_miss(&x, &y, 3).unwrap();
        assert_eq!(counts(&yr), (2, 2));
    }

    #[test]
    fn determinism_same_seed_same_output() {
        let (x, y) = toy(5, 40);
        for method in [
            ResampleMethod::RandomUnder,
            ResampleMethod::RandomOver,
            ResampleMethod::Smote,
            ResampleMethod::NearMiss,
        ] {
            let spec = ResampleSpec::new(method, 1234);
            let a = spec.apply(&x, &y).unwrap();
            let b = spec.apply(&x, &y).unwrap();
            assert_eq!(a, b, "{method:?} not deterministic");
        }
    }
}
