//! Within-view K-nearest-neighbor search and bag-of-neighbors vectors.
//!
//! A sample's BON vector has one entry per class: how many of its K nearest
//! same-view neighbors carry that label. Two views with unrelated feature
//! spaces produce BON vectors in the same `c`-dimensional count space, which
//! is what lets the cross-view graph compare them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabelVector;
use crate::linalg::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BonError {
    #[error("k = {k} is out of range for a view with {samples} samples (need 1 <= k <= n - 1)")]
    KTooLarge { k: usize, samples: usize },
    #[error("neighbor table has {table} rows but {labels} labels were given")]
    LengthMismatch { table: usize, labels: usize },
    #[error("label {label} of sample {sample} is outside 1..={class_count}")]
    LabelOutOfRange {
        sample: usize,
        label: usize,
        class_count: usize,
    },
}

/// Euclidean distance between rows `a` and `b`.
pub fn pairwise_distance(view: &Matrix, a: usize, b: usize) -> f64 {
    squared_distance(view.row(a), view.row(b)).sqrt()
}

/// For each sample, its `k` nearest other samples of the same view, ordered
/// by ascending distance with ties broken by ascending index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborTable {
    pub k: usize,
    pub indices: Vec<Vec<usize>>,
}

impl NeighborTable {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.indices[a]
    }
}

/// Exhaustive K-nearest-neighbor search within one view. Samples are never
/// their own neighbors.
pub fn knn(view: &Matrix, k: usize) -> Result<NeighborTable, BonError> {
    let n = view.rows();
    if k == 0 || k >= n {
        return Err(BonError::KTooLarge { k, samples: n });
    }
    let mut indices = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for a in 0..n {
        candidates.clear();
        candidates.extend(
            (0..n)
                .filter(|&b| b != a)
                .map(|b| (pairwise_distance(view, a, b), b)),
        );
        let by_distance =
            |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(by_distance);
        indices.push(candidates.iter().map(|&(_, b)| b).collect());
    }
    Ok(NeighborTable { k, indices })
}

/// Per-sample neighbor label counts (`n x c`) and the derived label sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BonMatrix {
    pub k: usize,
    pub class_count: usize,
    counts: Vec<u32>,
    /// Sorted class ids present among each sample's neighbors.
    pub label_sets: Vec<Vec<usize>>,
}

impl BonMatrix {
    pub fn samples(&self) -> usize {
        self.label_sets.len()
    }

    /// Count row of sample `a`; entry `t` is the number of neighbors of class `t + 1`.
    pub fn row(&self, a: usize) -> &[u32] {
        &self.counts[a * self.class_count..(a + 1) * self.class_count]
    }

    /// Whether `label` occurs among the neighbors of sample `a`.
    pub fn contains(&self, a: usize, label: usize) -> bool {
        label >= 1 && label <= self.class_count && self.row(a)[label - 1] > 0
    }

    /// Squared Euclidean distance between the BON rows of `a` here and `b` in `other`.
    pub fn squared_distance_to(&self, a: usize, other: &BonMatrix, b: usize) -> f64 {
        self.row(a)
            .iter()
            .zip(other.row(b))
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum()
    }

    /// Counts as a float matrix.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.samples(), self.class_count, |i, j| {
            self.counts[i * self.class_count + j] as f64
        })
    }
}

/// Counts neighbor labels per class for every sample.
pub fn bon_vectors(
    table: &NeighborTable,
    labels: &LabelVector,
    class_count: usize,
) -> Result<BonMatrix, BonError> {
    if table.len() != labels.len() {
        return Err(BonError::LengthMismatch {
            table: table.len(),
            labels: labels.len(),
        });
    }
    let labels = labels.as_slice();
    if let Some((sample, &label)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l == 0 || l > class_count)
    {
        return Err(BonError::LabelOutOfRange {
            sample,
            label,
            class_count,
        });
    }
    let mut counts = vec![0u32; table.len() * class_count];
    let mut label_sets = Vec::with_capacity(table.len());
    for (a, neighbors) in table.indices.iter().enumerate() {
        let row = &mut counts[a * class_count..(a + 1) * class_count];
        for &b in neighbors {
            row[labels[b] - 1] += 1;
        }
        label_sets.push(
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(t, _)| t + 1)
                .collect(),
        );
    }
    Ok(BonMatrix {
        k: table.k,
        class_count,
        counts,
        label_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_view(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn distance_cases() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(pairwise_distance(&m, 0, 2), 0.0);
        assert_eq!(pairwise_distance(&m, 0, 1), 5.0);
        assert_eq!(pairwise_distance(&m, 1, 0), 5.0);
        let r = random_view(2, 7, 1);
        let mut acc = 0.0;
        for j in 0..7 {
            let diff = r[(0, j)] - r[(1, j)];
            acc += diff * diff;
        }
        assert!((pairwise_distance(&r, 0, 1) - acc.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn knn_line() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0]]).unwrap();
        let t = knn(&m, 2).unwrap();
        assert_eq!(t.neighbors(0), &[1, 2]);
        assert_eq!(t.neighbors(3), &[2, 1]);
    }

    #[test]
    fn knn_ties_by_index() {
        let m = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        let t = knn(&m, 2).unwrap();
        assert_eq!(t.neighbors(0), &[1, 2]);
        assert_eq!(t.neighbors(1), &[0, 2]);
        assert_eq!(t.neighbors(3), &[0, 1]);
    }

    #[test]
    fn knn_k_bounds() {
        let m = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert_eq!(knn(&m, 3), Err(BonError::KTooLarge { k: 3, samples: 3 }));
        assert!(matches!(knn(&m, 0), Err(BonError::KTooLarge { .. })));
        assert_eq!(knn(&m, 2).unwrap().neighbors(1), &[0, 2]);
    }

    #[test]
    fn knn_matches_full_sort() {
        let m = random_view(50, 5, 7);
        let t = knn(&m, 7).unwrap();
        for a in 0..50 {
            let mut all: Vec<(f64, usize)> = (0..50)
                .filter(|&b| b != a)
                .map(|b| {
                    let s: f64 = (0..5).map(|j| (m[(a, j)] - m[(b, j)]).powi(2)).sum();
                    (s.sqrt(), b)
                })
                .collect();
            all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
            let expect: Vec<usize> = all[..7].iter().map(|x| x.1).collect();
            assert_eq!(t.neighbors(a), expect.as_slice());
        }
    }

    #[test]
    fn bon_direct_count() {
        let table = NeighborTable {
            k: 3,
            indices: vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]],
        };
        let labels = LabelVector(vec![3, 1, 1, 2]);
        let bon = bon_vectors(&table, &labels, 3).unwrap();
        assert_eq!(bon.row(0), &[2, 1, 0]);
        assert_eq!(bon.label_sets[0], vec![1, 2]);
        assert!(bon.contains(0, 2));
        assert!(!bon.contains(0, 3));
    }

    #[test]
    fn bon_single_class_neighborhood() {
        let table = NeighborTable {
            k: 2,
            indices: vec![vec![1, 2], vec![0, 2], vec![0, 1]],
        };
        let bon = bon_vectors(&table, &LabelVector(vec![2, 2, 2]), 3).unwrap();
        for a in 0..3 {
            assert_eq!(bon.row(a), &[0, 2, 0]);
        }
    }

    #[test]
    fn bon_rejects_mismatch() {
        let table = NeighborTable {
            k: 1,
            indices: vec![vec![1], vec![0]],
        };
        assert!(matches!(
            bon_vectors(&table, &LabelVector(vec![1]), 2),
            Err(BonError::LengthMismatch { .. })
        ));
        assert!(matches!(
            bon_vectors(&table, &LabelVector(vec![1, 3]), 2),
            Err(BonError::LabelOutOfRange { .. })
        ));
    }

    proptest! {
        #[test]
        fn bon_rows_sum_to_k(seed in 0u64..500, n in 4usize..30, c in 2usize..5) {
            let m = random_view(n, 3, seed);
            let k = 1 + (seed as usize % (n - 1));
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let labels = LabelVector((0..n).map(|_| rng.random_range(1..=c)).collect());
            let bon = bon_vectors(&knn(&m, k).unwrap(), &labels, c).unwrap();
            for a in 0..n {
                let row = bon.row(a);
                prop_assert_eq!(row.iter().sum::<u32>() as usize, k);
                prop_assert!(row.iter().all(|&x| x as usize <= k));
                let derived: Vec<usize> = (1..=c).filter(|&t| row[t - 1] > 0).collect();
                prop_assert_eq!(&bon.label_sets[a], &derived);
            }
        }

        #[test]
        fn knn_equivariant_under_permutation(seed in 0u64..200) {
            let n = 20;
            let m = random_view(n, 4, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let mut perm: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            // row i of permuted = row perm[i] of original
            let pm = m.select_rows(&perm);
            let t = knn(&m, 5).unwrap();
            let tp = knn(&pm, 5).unwrap();
            for i in 0..n {
                let mapped: Vec<usize> = tp.neighbors(i).iter().map(|&b| perm[b]).collect();
                // random continuous data has no distance ties, so order is preserved
                prop_assert_eq!(mapped.as_slice(), t.neighbors(perm[i]));
            }
        }

        #[test]
        fn knn_rotation_invariant(seed in 0u64..200) {
            let m = random_view(25, 2, seed);
            let theta = seed as f64 * 0.37;
            let (c, s) = (theta.cos(), theta.sin());
            let rot = Matrix::from_rows(&[[c, -s], [s, c]]).unwrap();
            let rotated = m.matmul(&rot);
            prop_assert_eq!(knn(&m, 6).unwrap(), knn(&rotated, 6).unwrap());
        }
    }
}
