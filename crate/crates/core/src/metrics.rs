//! Spread diagnostics and classification accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabelVector;
use crate::linalg::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("class {class} has {count} samples; S_W needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no samples")]
    Empty,
}

type Result<T> = std::result::Result<T, MetricsError>;

/// Rows grouped by label, in ascending label order.
fn groups(x: &Matrix, labels: &LabelVector) -> Result<BTreeMap<usize, Vec<usize>>> {
    if x.rows() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.rows(),
            right: labels.len(),
        });
    }
    if x.rows() == 0 {
        return Err(MetricsError::Empty);
    }
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.as_slice().iter().enumerate() {
        g.entry(l).or_default().push(i);
    }
    Ok(g)
}

fn mean_of(x: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for &i in rows {
        for (a, v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= rows.len() as f64);
    m
}

/// `S_W = (1/c) Σ_i Σ_{x ∈ X_i} ‖x − μ_i‖² / (n_i − 1)`, with `c` the number
/// of classes present.
pub fn s_w(x: &Matrix, labels: &LabelVector) -> Result<f64> {
    let g = groups(x, labels)?;
    let mut total = 0.0;
    for (&class, rows) in &g {
        if rows.len() < 2 {
            return Err(MetricsError::ClassTooSmall {
                class,
                count: rows.len(),
            });
        }
        let mu = mean_of(x, rows);
        let spread: f64 = rows.iter().map(|&i| squared_distance(x.row(i), &mu)).sum();
        total += spread / (rows.len() - 1) as f64;
    }
    Ok(total / g.len() as f64)
}

/// `S_B = (1/(n−1)) Σ_i n_i ‖μ_i − μ‖²`.
pub fn s_b(x: &Matrix, labels: &LabelVector) -> Result<f64> {
    let g = groups(x, labels)?;
    let n = x.rows();
    if n < 2 {
        return Err(MetricsError::ClassTooSmall { class: labels.0[0], count: 1 });
    }
    let all: Vec<usize> = (0..n).collect();
    let mu = mean_of(x, &all);
    let total: f64 = g
        .values()
        .map(|rows| rows.len() as f64 * squared_distance(&mean_of(x, rows), &mu))
        .sum();
    Ok(total / (n - 1) as f64)
}

pub fn accuracy(predicted: &LabelVector, truth: &LabelVector) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = predicted
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEval {
    pub view: usize,
    pub accuracy: f64,
    pub s_w: Option<f64>,
    pub s_b: Option<f64>,
}

/// One method's evaluation at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub dim: usize,
    pub seed: u64,
    pub views: Vec<ViewEval>,
    pub wall_time_secs: f64,
}

impl ViewEval {
    /// Accuracy plus spread diagnostics of `features` (diagnostics are left
    /// empty when a class is too small).
    pub fn new(view: usize, features: &Matrix, predicted: &LabelVector, truth: &LabelVector) -> Result<Self> {
        Ok(Self {
            view,
            accuracy: accuracy(predicted, truth)?,
            s_w: s_w(features, truth).ok(),
            s_b: s_b(features, truth).ok(),
        })
    }
}
