//! Multi-view Laplacian eigenmaps.
//!
//! Pipeline: z-score each view, K-NN within each view, BON vectors, global
//! weight graph, then the generalized eigenproblem `L y = λ D y`. The
//! eigenvector of the smallest eigenvalue (the constant vector, eigenvalue 0)
//! is discarded; the next `dim` eigenvectors form the embedding, whose rows
//! are split back into per-view blocks in view order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bon::{bon_vectors, knn, BonError, BonMatrix, NeighborTable};
use crate::dataset::{write_matrix_csv, DatasetError, MultiViewDataset, NormStats};
use crate::graph::{build_weight_graph, GraphError, WeightGraph};
use crate::linalg::{fix_column_signs, generalized_eig_diag, LinalgError, Matrix};

/// Eigenvalues at or below this are treated as zero when counting the
/// multiplicity of the trivial eigenvalue.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MvleError {
    #[error("bon: {0}")]
    Bon(#[from] BonError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("linalg: {0}")]
    Linalg(#[from] LinalgError),
    #[error("dim = {dim} is out of range; need 1 <= dim <= {max}")]
    DimTooLarge { dim: usize, max: usize },
    #[error("view {view} has no samples of class {class}; every class must appear in every view")]
    MissingClass { view: usize, class: usize },
    #[error("embedding has {rows} rows but the graph has {nodes} nodes")]
    RowMismatch { rows: usize, nodes: usize },
    #[error(transparent)]
    Io(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvleConfig {
    pub k: usize,
    pub dim: usize,
    /// Heat parameter; `None` uses the class count.
    pub heat_t: Option<f64>,
}

impl Default for MvleConfig {
    fn default() -> Self {
        Self {
            k: 10,
            dim: 4,
            heat_t: None,
        }
    }
}

/// `D`-orthonormal embedding coordinates, whole and split per view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub y: Matrix,
    pub per_view: Vec<Matrix>,
    /// Retained eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    /// Row offsets of each view block in `y`, plus a final entry `N`.
    pub block_offsets: Vec<usize>,
}

impl Embedding {
    fn from_eigenvectors(
        vectors: &Matrix,
        eigenvalues: &[f64],
        block_offsets: &[usize],
        dim: usize,
    ) -> Embedding {
        let mut y = vectors.slice_cols(1, dim + 1);
        fix_column_signs(&mut y);
        let per_view = block_offsets
            .windows(2)
            .map(|w| y.slice_rows(w[0], w[1]))
            .collect();
        Embedding {
            y,
            per_view,
            eigenvalues: eigenvalues[1..=dim].to_vec(),
            dim,
            block_offsets: block_offsets.to_vec(),
        }
    }

    /// The first `dim` coordinates. Eigen-subspaces nest, so this equals a
    /// fresh fit at the smaller dimension.
    pub fn truncated(&self, dim: usize) -> Embedding {
        assert!(dim >= 1 && dim <= self.dim, "cannot truncate to {dim}");
        let y = self.y.slice_cols(0, dim);
        let per_view = self
            .block_offsets
            .windows(2)
            .map(|w| y.slice_rows(w[0], w[1]))
            .collect();
        Embedding {
            y,
            per_view,
            eigenvalues: self.eigenvalues[..dim].to_vec(),
            dim,
            block_offsets: self.block_offsets.clone(),
        }
    }
}

/// Intermediate products of a fit, kept for out-of-sample training and
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifacts {
    pub norm_stats: Vec<NormStats>,
    pub neighbors: Vec<NeighborTable>,
    pub bons: Vec<BonMatrix>,
    pub graph: WeightGraph,
    /// Full generalized spectrum, ascending.
    pub spectrum: Vec<f64>,
    /// How many eigenvalues are numerically zero (connected components).
    pub zero_multiplicity: usize,
}

/// Runs the whole MvLE pipeline on (training) data.
pub fn fit(ds: &MultiViewDataset, cfg: &MvleConfig) -> Result<(Embedding, FitArtifacts), MvleError> {
    let c = ds.class_count;
    for (view, v) in ds.views.iter().enumerate() {
        let hist = v.labels.histogram(c);
        if let Some(missing) = hist.iter().position(|&h| h == 0) {
            return Err(MvleError::MissingClass {
                view,
                class: missing + 1,
            });
        }
    }
    let n = ds.total_samples();
    if cfg.dim == 0 || cfg.dim > n - 1 {
        return Err(MvleError::DimTooLarge {
            dim: cfg.dim,
            max: n - 1,
        });
    }

    let mut norm_stats = Vec::with_capacity(ds.view_count());
    let mut neighbors = Vec::with_capacity(ds.view_count());
    let mut bons = Vec::with_capacity(ds.view_count());
    for v in &ds.views {
        let stats = NormStats::fit(v.features());
        let table = knn(&stats.apply(v.features()), cfg.k)?;
        bons.push(bon_vectors(&table, &v.labels, c)?);
        neighbors.push(table);
        norm_stats.push(stats);
    }
    let labels: Vec<_> = ds.views.iter().map(|v| v.labels.clone()).collect();
    let t = cfg.heat_t.unwrap_or(c as f64);
    let graph = build_weight_graph(&bons, &labels, t)?;

    let (embedding, spectrum, zero_multiplicity) = solve(&graph, cfg.dim)?;
    Ok((
        embedding,
        FitArtifacts {
            norm_stats,
            neighbors,
            bons,
            graph,
            spectrum,
            zero_multiplicity,
        },
    ))
}

/// Solves `L y = λ D y` on a prepared graph and keeps eigenvectors `2..=dim+1`.
pub fn embed_graph(graph: &WeightGraph, dim: usize) -> Result<Embedding, MvleError> {
    solve(graph, dim).map(|(e, _, _)| e)
}

fn solve(graph: &WeightGraph, dim: usize) -> Result<(Embedding, Vec<f64>, usize), MvleError> {
    let n = graph.node_count();
    if dim == 0 || dim + 1 > n {
        return Err(MvleError::DimTooLarge {
            dim,
            max: n.saturating_sub(1),
        });
    }
    let eig = generalized_eig_diag(&graph.laplacian, &graph.degrees)?;
    let zero_multiplicity = eig
        .values
        .iter()
        .take_while(|&&v| v <= ZERO_EIGENVALUE_TOL)
        .count();
    if zero_multiplicity > 1 {
        log::warn!(
            "weight graph has {zero_multiplicity} connected components; \
             only the first zero-eigenvalue vector is dropped and the embedding \
             will contain component indicators (consider a larger k)"
        );
    }
    let embedding =
        Embedding::from_eigenvectors(&eig.vectors, &eig.values, &graph.block_offsets, dim);
    Ok((embedding, eig.values, zero_multiplicity))
}

/// `ξ(Y) = Σ_{a,b} ‖y_a − y_b‖² W_ab`, summed over both orderings of each pair.
pub fn objective(y: &Matrix, graph: &WeightGraph) -> Result<f64, MvleError> {
    let n = graph.node_count();
    if y.rows() != n {
        return Err(MvleError::RowMismatch {
            rows: y.rows(),
            nodes: n,
        });
    }
    let mut total = 0.0;
    for a in 0..n {
        let ya = y.row(a);
        for (b, &w) in graph.w.row(a).iter().enumerate() {
            if w != 0.0 {
                total += w * crate::linalg::squared_distance(ya, y.row(b));
            }
        }
    }
    Ok(total)
}

/// JSON sidecar written next to exported embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub t: f64,
    pub dim: usize,
    pub seed: Option<u64>,
    pub objective: f64,
    pub view_rows: Vec<usize>,
    pub zero_multiplicity: usize,
}

/// Writes `embedding_view{i}.csv` for each view (1-based) and `embedding.json`.
pub fn write_embedding(
    dir: &Path,
    embedding: &Embedding,
    sidecar: &EmbeddingSidecar,
) -> Result<(), MvleError> {
    for (i, block) in embedding.per_view.iter().enumerate() {
        write_matrix_csv(&dir.join(format!("embedding_view{}.csv", i + 1)), block)?;
    }
    let path = dir.join("embedding.json");
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    std::fs::write(&path, json).map_err(|source| {
        MvleError::Io(DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    })
}
