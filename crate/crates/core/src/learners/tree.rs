//! CART decision tree with weighted Gini impurity.
//!
//! Binary splits on value thresholds, midpoints between sorted unique
//! values. Impure nodes split as long as any valid threshold exists, even
//! at zero Gini gain (Gini gain is never negative, and zero-gain splits
//! let deeper levels separate parity-style interactions). Candidate
//! features can be subsampled per split for forest use.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` tries all.
    pub features_per_split: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Index of the child taking rows with `value <= threshold`.
        left: u32,
        right: u32,
    },
    Leaf {
        /// Weighted positive-class frequency of the training rows here.
        probability: f64,
    },
}

/// A fitted tree as a flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    /// Single-leaf tree emitting a constant probability.
    pub fn leaf(probability: f64, n_features: usize) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { probability }],
            n_features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { probability } => return *probability,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Fits a tree on the rows listed in `indices` (consumed as scratch).
///
/// `weights[i]` scales row `i` in the impurity and leaf frequencies;
/// duplicated indices (bootstrap draws) accumulate naturally.
pub(crate) fn fit_tree(
    x: &Matrix,
    y: &[bool],
    weights: &[f64],
    indices: &mut [usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let mut builder = Builder {
        x,
        y,
        weights,
        params,
        rng,
        nodes: Vec::new(),
        scratch: Vec::new(),
        partition: Vec::new(),
        feature_pool: (0..x.n_cols()).collect(),
        chosen: Vec::new(),
    };
    builder.build(indices, 0);
    DecisionTree {
        nodes: builder.nodes,
        n_features: x.n_cols(),
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    weights: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64, bool)>,
    partition: Vec<usize>,
    feature_pool: Vec<usize>,
    chosen: Vec<usize>,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn build(&mut self, indices: &mut [usize], depth: usize) -> u32 {
        let mut w_tot = 0.0;
        let mut w_pos = 0.0;
        for &i in indices.iter() {
            w_tot += self.weights[i];
            w_pos += self.weights[i] * f64::from(u8::from(self.y[i]));
        }
        let probability = if w_tot > 0.0 { w_pos / w_tot } else { 0.5 };

        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        let pure = w_pos == 0.0 || w_pos == w_tot;
        if pure || !depth_ok || indices.len() < self.params.min_samples_split {
            return self.push(Node::Leaf { probability });
        }

        let best = self.best_split(indices);
        let Some(best) = best else {
            return self.push(Node::Leaf { probability });
        };

        // stable in-place partition: left block then right block
        self.partition.clear();
        let mut left_len = 0usize;
        for &i in indices.iter() {
            if self.x.get(i, best.feature) <= best.threshold {
                self.partition.push(i);
                left_len += 1;
            }
        }
        for &i in indices.iter() {
            if self.x.get(i, best.feature) > best.threshold {
                self.partition.push(i);
            }
        }
        indices.copy_from_slice(&self.partition);

        let id = self.push(Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: 0,
            right: 0,
        });
        let (left_rows, right_rows) = indices.split_at_mut(left_len);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id as usize]
        {
            *l = left;
            *r = right;
        }
        id
    }

    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    /// Lowest weighted child-impurity split over the candidate features;
    /// ties keep the first candidate, so results are deterministic.
    fn best_split(&mut self, indices: &[usize]) -> Option<BestSplit> {
        let d = self.x.n_cols();
        let k = self.params.features_per_split.unwrap_or(d).min(d);
        self.chosen.clear();
        if k < d {
            let (sampled, _) = self.feature_pool.partial_shuffle(self.rng, k);
            self.chosen.extend_from_slice(sampled);
        } else {
            self.chosen.extend(0..d);
        }

        let msl = self.params.min_samples_leaf;
        let mut best: Option<BestSplit> = None;
        for fi in 0..k {
            let feature = self.chosen[fi];
            self.scratch.clear();
            for &i in indices {
                self.scratch
                    .push((self.x.get(i, feature), self.weights[i], self.y[i]));
            }
            self.scratch
                .sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let m = self.scratch.len();
            let mut right_w = 0.0;
            let mut right_p = 0.0;
            for &(_, w, label) in self.scratch.iter() {
                right_w += w;
                right_p += w * f64::from(u8::from(label));
            }
            let mut left_w = 0.0;
            let mut left_p = 0.0;
            for cut in 0..m - 1 {
                let (value, w, label) = self.scratch[cut];
                let wy = w * f64::from(u8::from(label));
                left_w += w;
                left_p += wy;
                right_w -= w;
                right_p -= wy;
                let next = self.scratch[cut + 1].0;
                if value == next {
                    continue;
                }
                if cut + 1 < msl || m - cut - 1 < msl {
                    continue;
                }
                // weighted Gini of both children: 2 p q / w each
                let impurity = 2.0 * left_p * (left_w - left_p) / left_w
                    + 2.0 * right_p * (right_w - right_p) / right_w;
                if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                    let mut threshold = 0.5 * (value + next);
                    // keep the threshold strictly below the right value so
                    // float rounding cannot move boundary rows
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(BestSplit {
                        impurity,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn xor_data() -> (Matrix, Vec<bool>) {
        let rows: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        (
            Matrix::from_rows(&refs).unwrap(),
            vec![false, true, true, false],
        )
    }

    fn fit(x: &Matrix, y: &[bool], params: TreeParams) -> DecisionTree {
        let weights = vec![1.0; y.len()];
        let mut indices: Vec<usize> = (0..y.len()).collect();
        let mut rng = rng_from_seed(0);
        fit_tree(x, y, &weights, &mut indices, &params, &mut rng)
    }

    #[test]
    fn depth2_tree_fits_xor_exactly() {
        let (x, y) = xor_data();
        let tree = fit(
            &x,
            &y,
            TreeParams {
                max_depth: Some(2),
                ..TreeParams::default()
            },
        );
        for i in 0..4 {
            let p = tree.predict_row(x.row(i));
            assert_eq!(p > 0.5, y[i], "row {i} predicted {p}");
        }
    }

    #[test]
    fn depth1_stump_cannot_fit_xor() {
        let (x, y) = xor_data();
        let tree = fit(
            &x,
            &y,
            TreeParams {
                max_depth: Some(1),
                ..TreeParams::default()
            },
        );
        let correct = (0..4)
            .filter(|&i| {
                let p = tree.predict_row(x.row(i));
                (p > 0.5) == y[i]
            })
            .count();
        assert!(correct <= 3, "a stump separated XOR: {correct}/4");
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![3.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let tree = fit(&x, &[true, true, true], TreeParams::default());
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.predict_row(&[9.0]), 1.0);
    }

    #[test]
    fn constant_features_leave_a_leaf() {
        let rows: Vec<Vec<f64>> = vec![vec![5.0], vec![5.0], vec![5.0], vec![5.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let tree = fit(&x, &[true, false, true, false], TreeParams::default());
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.predict_row(&[5.0]), 0.5);
    }

    #[test]
    fn weights_shift_the_leaf_frequency() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0], vec![0.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let y = [true, false];
        let weights = [3.0, 1.0];
        let mut indices = vec![0, 1];
        let mut rng = rng_from_seed(0);
        let tree = fit_tree(
            &x,
            &y,
            &weights,
            &mut indices,
            &TreeParams::default(),
            &mut rng,
        );
        assert_eq!(tree.predict_row(&[0.0]), 0.75);
    }

    #[test]
    fn separable_data_splits_at_midpoint() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![10.0], vec![11.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let tree = fit(&x, &[false, false, true, true], TreeParams::default());
        assert_eq!(tree.predict_row(&[5.9]), 0.0);
        assert_eq!(tree.predict_row(&[6.1]), 1.0);
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_cuts() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = Matrix::from_rows(&refs).unwrap();
        let tree = fit(
            &x,
            &[true, false, false, true],
            TreeParams {
                min_samples_leaf: 2,
                max_depth: Some(1),
                ..TreeParams::default()
            },
        );
        // only the middle cut is allowed
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 2.5),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }
}
