//! The global multi-view weight graph.
//!
//! All views' samples become nodes of one graph laid out block by block in
//! view order. Two samples are connected when each one's label occurs among
//! the other's neighbor labels; connected pairs get the heat-kernel weight of
//! their BON distance, everything else is zero. The rule is applied
//! identically to intra-view and inter-view pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bon::BonMatrix;
use crate::dataset::LabelVector;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("view {view} has {found} classes, expected {expected}")]
    ClassCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },
    #[error("view {view}: {bons} BON rows but {labels} labels")]
    LengthMismatch {
        view: usize,
        bons: usize,
        labels: usize,
    },
    #[error("heat parameter t must be positive and finite, got {0}")]
    InvalidHeat(f64),
    #[error("no views given")]
    NoViews,
    #[error("sample {index} has no connections (degree 0); try a larger k")]
    IsolatedSample { index: usize },
    #[error("weight matrix must be square and symmetric")]
    NotSymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGraph {
    pub w: Matrix,
    /// Global index of the first sample of each view, plus a final entry `N`.
    pub block_offsets: Vec<usize>,
    pub degrees: Vec<f64>,
    pub laplacian: Matrix,
    pub heat_t: f64,
}

impl WeightGraph {
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn view_range(&self, view: usize) -> std::ops::Range<usize> {
        self.block_offsets[view]..self.block_offsets[view + 1]
    }

    /// Number of connected components (edges with positive weight).
    pub fn component_count(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(a) = stack.pop() {
                for (b, &w) in self.w.row(a).iter().enumerate() {
                    if w > 0.0 && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        components
    }
}

/// The connection rule: `label_a ∈ labels(b)` and `label_b ∈ labels(a)`.
pub fn connected(
    bon_a: &BonMatrix,
    a: usize,
    label_a: usize,
    bon_b: &BonMatrix,
    b: usize,
    label_b: usize,
) -> bool {
    bon_b.contains(b, label_a) && bon_a.contains(a, label_b)
}

/// Assembles `W`, its degrees and Laplacian over all views.
///
/// Only the upper triangle is evaluated and mirrored, so `W` is exactly
/// symmetric. The diagonal is zero.
pub fn build_weight_graph(
    bons: &[BonMatrix],
    labels: &[LabelVector],
    t: f64,
) -> Result<WeightGraph, GraphError> {
    if bons.is_empty() {
        return Err(GraphError::NoViews);
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(GraphError::InvalidHeat(t));
    }
    let c = bons[0].class_count;
    for (view, (bon, lab)) in bons.iter().zip(labels).enumerate() {
        if bon.class_count != c {
            return Err(GraphError::ClassCountMismatch {
                view,
                expected: c,
                found: bon.class_count,
            });
        }
        if bon.samples() != lab.len() {
            return Err(GraphError::LengthMismatch {
                view,
                bons: bon.samples(),
                labels: lab.len(),
            });
        }
    }
    if labels.len() != bons.len() {
        return Err(GraphError::LengthMismatch {
            view: labels.len().min(bons.len()),
            bons: bons.len(),
            labels: labels.len(),
        });
    }

    let mut block_offsets = Vec::with_capacity(bons.len() + 1);
    let mut nodes = Vec::new();
    for (view, bon) in bons.iter().enumerate() {
        block_offsets.push(nodes.len());
        nodes.extend((0..bon.samples()).map(|a| (view, a)));
    }
    block_offsets.push(nodes.len());

    let n = nodes.len();
    let mut w = Matrix::zeros(n, n);
    for (ga, &(va, a)) in nodes.iter().enumerate() {
        let label_a = labels[va].as_slice()[a];
        for (gb, &(vb, b)) in nodes.iter().enumerate().skip(ga + 1) {
            let label_b = labels[vb].as_slice()[b];
            if connected(&bons[va], a, label_a, &bons[vb], b, label_b) {
                let dist2 = bons[va].squared_distance_to(a, &bons[vb], b);
                let weight = (-dist2 / t).exp();
                w[(ga, gb)] = weight;
                w[(gb, ga)] = weight;
            }
        }
    }
    let (degrees, laplacian) = degree_and_laplacian(&w)?;
    Ok(WeightGraph {
        w,
        block_offsets,
        degrees,
        laplacian,
        heat_t: t,
    })
}

/// `D_ii = Σ_j W_ji` and `L = D − W`.
pub fn degree_and_laplacian(w: &Matrix) -> Result<(Vec<f64>, Matrix), GraphError> {
    let n = w.rows();
    if w.cols() != n {
        return Err(GraphError::NotSymmetric);
    }
    let mut degrees = vec![0.0; n];
    for j in 0..n {
        for (d, &x) in degrees.iter_mut().zip(w.row(j)) {
            *d += x;
        }
    }
    if let Some(index) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(GraphError::IsolatedSample { index });
    }
    let mut laplacian = w.scale(-1.0);
    for (i, &d) in degrees.iter().enumerate() {
        laplacian[(i, i)] += d;
    }
    Ok((degrees, laplacian))
}
