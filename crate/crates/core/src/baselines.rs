//! Comparison methods: classic LE, LDA, CCA and CCA+LDA, PLS, MvDA and
//! MvDA-VC, plus the random-feature ELM classifier used to score them.
//!
//! Every linear method z-scores its training views first and stores the
//! statistics in the returned [`LinearProjector`], so `project` takes raw
//! features. Generalized eigenproblems put a small ridge on the denominator
//! scatter: `ε = 1e-6 · trace / dim`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bon::{knn, BonError};
use crate::dataset::{LabelVector, MultiViewDataset, NormStats};
use crate::graph::{degree_and_laplacian, GraphError, WeightGraph};
use crate::linalg::{
    fix_column_signs, generalized_sym_eig, ridge_solve, squared_distance, sym_eig, LinalgError,
    Matrix,
};
use crate::mhon::{argmax_labels, Activation, RandomLayer};
use crate::mvle::{embed_graph, Embedding, MvleError};

/// Relative ridge on denominator scatter matrices.
pub const SCATTER_RIDGE: f64 = 1e-6;
/// Ridge added to each view's auto-covariance in CCA.
pub const CCA_KAPPA: f64 = 1e-4;
pub const PLS_MAX_ITER: usize = 10_000;
const PLS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("linalg: {0}")]
    Linalg(#[from] LinalgError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("bon: {0}")]
    Bon(#[from] BonError),
    #[error("mvle: {0}")]
    Mvle(#[from] MvleError),
    #[error("dim = {dim} is out of range; need 1 <= dim <= {max}")]
    DimTooLarge { dim: usize, max: usize },
    #[error("views must be exactly two with equal sample counts (got {views} views, {detail})")]
    UnpairedViews { views: usize, detail: String },
    #[error("view consistency needs equal view dimensions, got {0:?}")]
    VcDimMismatch(Vec<usize>),
    #[error("power iteration for component {component} did not converge")]
    NoConvergence { component: usize },
    #[error("input has {got} columns, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("view {view} is out of range for a {views}-view projector")]
    NoSuchView { view: usize, views: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, BaselineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectorKind {
    Lda,
    Cca,
    CcaLda,
    Pls,
    Mvda,
    MvdaVc,
}

/// Per-view linear maps `W_i` (`d_i x dim`) applied after z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProjector {
    pub method: ProjectorKind,
    pub norm_stats: Vec<NormStats>,
    pub projections: Vec<Matrix>,
}

impl LinearProjector {
    pub fn dim(&self) -> usize {
        self.projections[0].cols()
    }

    pub fn view_count(&self) -> usize {
        self.projections.len()
    }

    pub fn project(&self, view: usize, x: &Matrix) -> Result<Matrix> {
        let w = self.projections.get(view).ok_or(BaselineError::NoSuchView {
            view,
            views: self.view_count(),
        })?;
        if x.cols() != w.rows() {
            return Err(BaselineError::DimMismatch {
                expected: w.rows(),
                got: x.cols(),
            });
        }
        Ok(self.norm_stats[view].apply(x).matmul(w))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("projector serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: LinearProjector = serde_json::from_str(s)?;
        let ok = !p.projections.is_empty()
            && p.projections.len() == p.norm_stats.len()
            && p.projections.iter().all(|w| w.cols() == p.projections[0].cols() && w.is_finite())
            && p
                .projections
                .iter()
                .zip(&p.norm_stats)
                .all(|(w, s)| w.rows() == s.dim() && s.std.len() == s.dim());
        if !ok {
            return Err(BaselineError::InvalidInput(
                "projector shapes are inconsistent".into(),
            ));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn class_groups(labels: &LabelVector) -> BTreeMap<usize, Vec<usize>> {
    let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.as_slice().iter().enumerate() {
        g.entry(l).or_default().push(i);
    }
    g
}

fn column_sums(x: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut s = vec![0.0; x.cols()];
    for &i in rows {
        for (a, v) in s.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    s
}

fn regularize(s: &mut Matrix) {
    let d = s.rows() as f64;
    let tr = s.trace();
    let eps = SCATTER_RIDGE * if tr > 0.0 { tr / d } else { 1.0 };
    s.add_to_diag(eps);
}

/// Leading `dim` generalized eigenvectors of `(a, b)`, largest eigenvalue first.
fn top_generalized(a: &Matrix, b: &Matrix, dim: usize) -> Result<(Matrix, Vec<f64>)> {
    let eig = generalized_sym_eig(a, b)?.into_descending();
    Ok((eig.vectors.slice_cols(0, dim), eig.values[..dim].to_vec()))
}

fn check_dim(dim: usize, max: usize) -> Result<()> {
    if dim == 0 || dim > max {
        return Err(BaselineError::DimTooLarge { dim, max });
    }
    Ok(())
}

fn check_labels(x: &Matrix, labels: &LabelVector) -> Result<()> {
    if x.rows() != labels.len() || x.rows() == 0 {
        return Err(BaselineError::InvalidInput(format!(
            "{} rows but {} labels",
            x.rows(),
            labels.len()
        )));
    }
    Ok(())
}

/// Neighborhood rule for the classic LE graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeNeighborhood {
    /// `a ~ b` when either is among the other's `k` nearest neighbors.
    Knn(usize),
    /// `a ~ b` when `‖x_a − x_b‖ < ε`.
    Epsilon(f64),
}

/// Unsupervised heat-kernel graph on one view.
pub fn le_graph(x: &Matrix, neighborhood: LeNeighborhood, heat_t: f64) -> Result<WeightGraph> {
    if !(heat_t > 0.0) || !heat_t.is_finite() {
        return Err(GraphError::InvalidHeat(heat_t).into());
    }
    let n = x.rows();
    let mut w = Matrix::zeros(n, n);
    let mut link = |a: usize, b: usize| {
        let v = (-squared_distance(x.row(a), x.row(b)) / heat_t).exp();
        w[(a, b)] = v;
        w[(b, a)] = v;
    };
    match neighborhood {
        LeNeighborhood::Knn(k) => {
            let table = knn(x, k)?;
            for a in 0..n {
                for &b in table.neighbors(a) {
                    link(a, b);
                }
            }
        }
        LeNeighborhood::Epsilon(eps) => {
            let eps2 = eps * eps;
            for a in 0..n {
                for b in (a + 1)..n {
                    if squared_distance(x.row(a), x.row(b)) < eps2 {
                        link(a, b);
                    }
                }
            }
        }
    }
    let (degrees, laplacian) = degree_and_laplacian(&w)?;
    Ok(WeightGraph {
        w,
        block_offsets: vec![0, n],
        degrees,
        laplacian,
        heat_t,
    })
}

/// Classic Laplacian eigenmaps on a single view.
pub fn le_fit(
    x: &Matrix,
    neighborhood: LeNeighborhood,
    heat_t: f64,
    dim: usize,
) -> Result<Embedding> {
    let graph = le_graph(x, neighborhood, heat_t)?;
    Ok(embed_graph(&graph, dim)?)
}

/// Within- and between-class scatter of rows of `x`.
fn class_scatter(x: &Matrix, labels: &LabelVector) -> (Matrix, Matrix) {
    let n = x.rows();
    let total = column_sums(x, &(0..n).collect::<Vec<_>>());
    let mu: Vec<f64> = total.iter().map(|s| s / n as f64).collect();
    let groups = class_groups(labels);
    let mut centered = x.clone();
    let mut between = Matrix::zeros(groups.len(), x.cols());
    for (g, rows) in groups.values().enumerate() {
        let m: Vec<f64> = column_sums(x, rows)
            .iter()
            .map(|s| s / rows.len() as f64)
            .collect();
        for &i in rows {
            for (v, mj) in centered.row_mut(i).iter_mut().zip(&m) {
                *v -= mj;
            }
        }
        let scale = (rows.len() as f64).sqrt();
        for (j, b) in between.row_mut(g).iter_mut().enumerate() {
            *b = scale * (m[j] - mu[j]);
        }
    }
    (centered.t_matmul(&centered), between.t_matmul(&between))
}

/// LDA directions on already normalized rows.
fn lda_directions(x: &Matrix, labels: &LabelVector, dim: usize) -> Result<Matrix> {
    let c = class_groups(labels).len();
    check_dim(dim, c.saturating_sub(1).min(x.cols()))?;
    let (mut s_w, s_b) = class_scatter(x, labels);
    regularize(&mut s_w);
    let (mut w, _) = top_generalized(&s_b, &s_w, dim)?;
    fix_column_signs(&mut w);
    Ok(w)
}

/// Fisher LDA on one view; `dim <= min(c − 1, d)`.
pub fn lda_fit(x: &Matrix, labels: &LabelVector, dim: usize) -> Result<LinearProjector> {
    check_labels(x, labels)?;
    let stats = NormStats::fit(x);
    let w = lda_directions(&stats.apply(x), labels, dim)?;
    Ok(LinearProjector {
        method: ProjectorKind::Lda,
        norm_stats: vec![stats],
        projections: vec![w],
    })
}

fn require_pair(ds: &MultiViewDataset) -> Result<()> {
    if ds.view_count() != 2 {
        return Err(BaselineError::UnpairedViews {
            views: ds.view_count(),
            detail: "need 2".into(),
        });
    }
    let (a, b) = (ds.views[0].samples(), ds.views[1].samples());
    if a != b {
        return Err(BaselineError::UnpairedViews {
            views: 2,
            detail: format!("{a} vs {b} samples"),
        });
    }
    Ok(())
}

fn inverse_sqrt(c: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(c)?;
    let v = &eig.vectors;
    let scaled = Matrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] / eig.values[j].sqrt());
    Ok(scaled.matmul_t(v))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaFit {
    pub projector: LinearProjector,
    /// Sample correlation of each pair of canonical variates on the training
    /// data, in component order.
    pub correlations: Vec<f64>,
}

/// Regularized CCA on two paired views; `dim <= min(d_1, d_2)`.
pub fn cca_fit(ds: &MultiViewDataset, dim: usize) -> Result<CcaFit> {
    require_pair(ds)?;
    let (d1, d2) = (ds.views[0].dim(), ds.views[1].dim());
    check_dim(dim, d1.min(d2))?;
    let n = ds.views[0].samples();
    if n < 2 {
        return Err(BaselineError::InvalidInput("CCA needs at least 2 samples".into()));
    }
    let stats: Vec<NormStats> = ds.views.iter().map(|v| NormStats::fit(v.features())).collect();
    let z1 = stats[0].apply(ds.views[0].features());
    let z2 = stats[1].apply(ds.views[1].features());
    let denom = (n - 1) as f64;
    let mut c11 = z1.t_matmul(&z1).scale(1.0 / denom);
    let mut c22 = z2.t_matmul(&z2).scale(1.0 / denom);
    c11.add_to_diag(CCA_KAPPA);
    c22.add_to_diag(CCA_KAPPA);
    let c12 = z1.t_matmul(&z2).scale(1.0 / denom);
    let (r1, r2) = (inverse_sqrt(&c11)?, inverse_sqrt(&c22)?);
    let m = r1.matmul(&c12).matmul(&r2);

    // Singular pairs of M from the symmetric embedding [[0, M], [Mᵀ, 0]].
    let size = d1 + d2;
    let jw = Matrix::from_fn(size, size, |i, j| match (i < d1, j < d1) {
        (true, false) => m[(i, j - d1)],
        (false, true) => m[(j, i - d1)],
        _ => 0.0,
    });
    let eig = sym_eig(&jw)?.into_descending();
    let s2 = std::f64::consts::SQRT_2;
    let u = eig.vectors.slice_rows(0, d1).slice_cols(0, dim).scale(s2);
    let v = eig.vectors.slice_rows(d1, size).slice_cols(0, dim).scale(s2);
    let mut stacked = Matrix::vstack(&[&r1.matmul(&u), &r2.matmul(&v)])?;
    fix_column_signs(&mut stacked);
    let w1 = stacked.slice_rows(0, d1);
    let w2 = stacked.slice_rows(d1, size);

    let (p1, p2) = (z1.matmul(&w1), z2.matmul(&w2));
    let correlations = (0..dim)
        .map(|j| pearson(&p1.column(j), &p2.column(j)).abs())
        .collect();
    Ok(CcaFit {
        projector: LinearProjector {
            method: ProjectorKind::Cca,
            norm_stats: stats,
            projections: vec![w1, w2],
        },
        correlations,
    })
}

/// CCA followed by LDA on the pooled canonical variates of both views.
///
/// CCA keeps `min(dim, d_1, d_2)` components and LDA `min(dim, c − 1)` of
/// those, so the returned projector can be narrower than `dim`.
pub fn cca_lda_fit(ds: &MultiViewDataset, dim: usize) -> Result<LinearProjector> {
    require_pair(ds)?;
    if dim == 0 {
        return Err(BaselineError::DimTooLarge { dim, max: 0 });
    }
    let cca_dim = dim.min(ds.views[0].dim()).min(ds.views[1].dim());
    let cca = cca_fit(ds, cca_dim)?.projector;
    let p1 = cca.project(0, ds.views[0].features())?;
    let p2 = cca.project(1, ds.views[1].features())?;
    let pooled = Matrix::vstack(&[&p1, &p2])?;
    let mut labels = ds.views[0].labels.0.clone();
    labels.extend_from_slice(&ds.views[1].labels.0);
    let labels = LabelVector(labels);
    let c = class_groups(&labels).len();
    let lda_dim = cca_dim.min(c.saturating_sub(1));
    let l = lda_directions(&pooled, &labels, lda_dim)?;
    Ok(LinearProjector {
        method: ProjectorKind::CcaLda,
        projections: cca.projections.iter().map(|w| w.matmul(&l)).collect(),
        norm_stats: cca.norm_stats,
    })
}

/// PLS weights plus the decomposition artifacts `X = T Pᵀ + E`,
/// `Y = U Qᵀ + F`, `U ≈ T diag(inner)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsFit {
    pub projector: LinearProjector,
    pub x_scores: Matrix,
    pub y_scores: Matrix,
    pub x_loadings: Matrix,
    pub y_loadings: Matrix,
    pub inner: Vec<f64>,
    pub x_residual: Matrix,
    pub y_residual: Matrix,
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
}

/// A unit vector orthogonal to the columns of `basis` (which are orthonormal).
fn complement_vector(basis: &[Vec<f64>], d: usize) -> Vec<f64> {
    for e in 0..d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for b in basis {
            let p = crate::linalg::dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        if let Some(u) = unit(&v).filter(|_| v.iter().map(|x| x * x).sum::<f64>() > 1e-12) {
            return u;
        }
    }
    unreachable!("more components than dimensions")
}

/// Dominant singular pair of `c` by alternating power steps.
fn power_pair(c: &Matrix, component: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let start = (0..c.cols())
        .max_by(|&a, &b| {
            let na: f64 = c.column(a).iter().map(|x| x * x).sum();
            let nb: f64 = c.column(b).iter().map(|x| x * x).sum();
            na.total_cmp(&nb).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let mut w = unit(&c.column(start)).expect("nonzero cross-covariance");
    let mut sigma = 0.0;
    for _ in 0..PLS_MAX_ITER {
        let cw = c.transpose().matvec(&w);
        let q = unit(&cw).expect("nonzero cross-covariance");
        let raw = c.matvec(&q);
        let new_sigma = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let w_new = unit(&raw).expect("nonzero cross-covariance");
        let step = squared_distance(&w, &w_new).sqrt();
        let sigma_step = (new_sigma - sigma).abs();
        w = w_new;
        sigma = new_sigma;
        // A stalled singular value with a moving vector means a repeated
        // singular value; any vector in that subspace is a valid answer.
        if step < PLS_TOL || sigma_step <= 1e-15 * sigma {
            let q = unit(&c.transpose().matvec(&w)).expect("nonzero cross-covariance");
            return Ok((w, q));
        }
    }
    Err(BaselineError::NoConvergence { component })
}

/// NIPALS PLS on two paired views; `dim <= min(d_1, d_2)`.
///
/// Deflation acts in weight space, `X ← X(I − wwᵀ)` and `Y ← Y(I − ccᵀ)`, so
/// weight vectors are orthonormal and the residual cross-covariance loses
/// exactly the extracted component.
pub fn pls_fit(ds: &MultiViewDataset, dim: usize) -> Result<PlsFit> {
    require_pair(ds)?;
    let (d1, d2) = (ds.views[0].dim(), ds.views[1].dim());
    check_dim(dim, d1.min(d2))?;
    let n = ds.views[0].samples();
    let stats: Vec<NormStats> = ds.views.iter().map(|v| NormStats::fit(v.features())).collect();
    let mut x = stats[0].apply(ds.views[0].features());
    let mut y = stats[1].apply(ds.views[1].features());
    let scale0 = x.t_matmul(&y).frobenius_norm();

    let (mut ws, mut cs) = (Vec::new(), Vec::new());
    let mut t_scores = Matrix::zeros(n, dim);
    let mut u_scores = Matrix::zeros(n, dim);
    let mut p_load = Matrix::zeros(d1, dim);
    let mut q_load = Matrix::zeros(d2, dim);
    let mut inner = Vec::with_capacity(dim);
    for k in 0..dim {
        let cross = x.t_matmul(&y);
        let (w, c) = if cross.frobenius_norm() <= 1e-12 * scale0.max(f64::MIN_POSITIVE) {
            (complement_vector(&ws, d1), complement_vector(&cs, d2))
        } else {
            power_pair(&cross, k)?
        };
        let t = x.matvec(&w);
        let u = y.matvec(&c);
        let tt = crate::linalg::dot(&t, &t);
        let uu = crate::linalg::dot(&u, &u);
        let xt = x.transpose().matvec(&t);
        let yu = y.transpose().matvec(&u);
        for i in 0..d1 {
            p_load[(i, k)] = if tt > 0.0 { xt[i] / tt } else { 0.0 };
        }
        for i in 0..d2 {
            q_load[(i, k)] = if uu > 0.0 { yu[i] / uu } else { 0.0 };
        }
        inner.push(if tt > 0.0 { crate::linalg::dot(&u, &t) / tt } else { 0.0 });
        t_scores.set_column(k, &t);
        u_scores.set_column(k, &u);
        x = x.sub(&Matrix::from_fn(n, d1, |i, j| t[i] * w[j]));
        y = y.sub(&Matrix::from_fn(n, d2, |i, j| u[i] * c[j]));
        ws.push(w);
        cs.push(c);
    }
    let w1 = Matrix::from_fn(d1, dim, |i, j| ws[j][i]);
    let w2 = Matrix::from_fn(d2, dim, |i, j| cs[j][i]);
    Ok(PlsFit {
        projector: LinearProjector {
            method: ProjectorKind::Pls,
            norm_stats: stats,
            projections: vec![w1, w2],
        },
        x_scores: t_scores,
        y_scores: u_scores,
        x_loadings: p_load,
        y_loadings: q_load,
        inner,
        x_residual: x,
        y_residual: y,
    })
}

/// Stacked within/between scatter of the joint projection `[w_1; ...; w_v]`.
///
/// Class means are pooled over all views' projected samples of that class.
fn mvda_scatter(z: &[Matrix], labels: &[&LabelVector]) -> (Matrix, Matrix) {
    let dims: Vec<usize> = z.iter().map(|m| m.cols()).collect();
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(dims.iter().scan(0, |acc, d| {
            *acc += d;
            Some(*acc)
        }))
        .collect();
    let total_dim = offsets[dims.len()];
    let classes: Vec<usize> = {
        let mut all: Vec<usize> = labels.iter().flat_map(|l| l.0.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let groups: Vec<BTreeMap<usize, Vec<usize>>> = labels.iter().map(|l| class_groups(l)).collect();
    // s[i][j] = sum of view i's rows of class j
    let sums: Vec<Vec<Vec<f64>>> = z
        .iter()
        .zip(&groups)
        .map(|(m, g)| {
            classes
                .iter()
                .map(|c| g.get(c).map_or(vec![0.0; m.cols()], |rows| column_sums(m, rows)))
                .collect()
        })
        .collect();
    let class_n: Vec<f64> = classes
        .iter()
        .map(|c| groups.iter().map(|g| g.get(c).map_or(0, Vec::len)).sum::<usize>() as f64)
        .collect();
    let n: f64 = class_n.iter().sum();
    let view_sums: Vec<Vec<f64>> = z
        .iter()
        .map(|m| column_sums(m, &(0..m.rows()).collect::<Vec<_>>()))
        .collect();

    let mut s_w = Matrix::zeros(total_dim, total_dim);
    let mut s_b = Matrix::zeros(total_dim, total_dim);
    for (i, zi) in z.iter().enumerate() {
        let gram = zi.t_matmul(zi);
        for a in 0..dims[i] {
            for b in 0..dims[i] {
                s_w[(offsets[i] + a, offsets[i] + b)] += gram[(a, b)];
            }
        }
        for l in 0..z.len() {
            for a in 0..dims[i] {
                for b in 0..dims[l] {
                    let pooled: f64 = (0..classes.len())
                        .filter(|&j| class_n[j] > 0.0)
                        .map(|j| sums[i][j][a] * sums[l][j][b] / class_n[j])
                        .sum();
                    let global = view_sums[i][a] * view_sums[l][b] / n;
                    s_w[(offsets[i] + a, offsets[l] + b)] -= pooled;
                    s_b[(offsets[i] + a, offsets[l] + b)] += pooled - global;
                }
            }
        }
    }
    (s_w, s_b)
}

/// Multi-view discriminant analysis (ratio-trace form).
///
/// With `view_consistency = Some(λ)` the denominator also carries
/// `λ Σ_{i,j} ‖w_i − w_j‖²`, which needs equal view dimensions.
pub fn mvda_fit(
    ds: &MultiViewDataset,
    dim: usize,
    view_consistency: Option<f64>,
) -> Result<LinearProjector> {
    let dims: Vec<usize> = ds.views.iter().map(|v| v.dim()).collect();
    let total: usize = dims.iter().sum();
    check_dim(dim, total)?;
    if let Some(lambda) = view_consistency {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(BaselineError::InvalidInput(format!(
                "view consistency weight must be >= 0, got {lambda}"
            )));
        }
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(BaselineError::VcDimMismatch(dims));
        }
    }
    let stats: Vec<NormStats> = ds.views.iter().map(|v| NormStats::fit(v.features())).collect();
    let z: Vec<Matrix> = ds
        .views
        .iter()
        .zip(&stats)
        .map(|(v, s)| s.apply(v.features()))
        .collect();
    let labels: Vec<&LabelVector> = ds.views.iter().map(|v| &v.labels).collect();
    let (mut s_w, s_b) = mvda_scatter(&z, &labels);
    regularize(&mut s_w);
    if let Some(lambda) = view_consistency {
        // Σ_{i,j} ‖w_i − w_j‖² = wᵀ [2 (vI − 11ᵀ) ⊗ I_d] w
        let (v, d) = (dims.len(), dims[0]);
        for i in 0..v {
            for j in 0..v {
                let coef = 2.0 * lambda * (if i == j { v as f64 } else { 0.0 } - 1.0);
                for a in 0..d {
                    s_w[(i * d + a, j * d + a)] += coef;
                }
            }
        }
    }
    let (mut w, _) = top_generalized(&s_b, &s_w, dim)?;
    fix_column_signs(&mut w);
    let mut projections = Vec::with_capacity(dims.len());
    let mut start = 0;
    for d in &dims {
        projections.push(w.slice_rows(start, start + d));
        start += d;
    }
    Ok(LinearProjector {
        method: if view_consistency.is_some() {
            ProjectorKind::MvdaVc
        } else {
            ProjectorKind::Mvda
        },
        norm_stats: stats,
        projections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElmConfig {
    pub hidden: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            lambda: 1e-2,
            seed: 0,
        }
    }
}

/// Sigmoid random layer with ridge-solved output weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmClassifier {
    pub norm_stats: NormStats,
    pub layer: RandomLayer,
    pub output: Matrix,
    pub class_count: usize,
    pub lambda: f64,
    pub seed: u64,
}

pub fn elm_train(
    x: &Matrix,
    labels: &LabelVector,
    class_count: usize,
    cfg: &ElmConfig,
) -> Result<ElmClassifier> {
    check_labels(x, labels)?;
    if cfg.hidden == 0 || !(cfg.lambda > 0.0) {
        return Err(BaselineError::InvalidInput(
            "ELM needs hidden >= 1 and lambda > 0".into(),
        ));
    }
    if labels.max_class() > class_count {
        return Err(BaselineError::InvalidInput(format!(
            "label {} exceeds class count {class_count}",
            labels.max_class()
        )));
    }
    let norm_stats = NormStats::fit(x);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layer = RandomLayer::sample(x.cols(), cfg.hidden, Activation::Sigmoid, &mut rng);
    let h = layer.forward(&norm_stats.apply(x));
    let output = ridge_solve(&h, &labels.one_hot(class_count), cfg.lambda)?;
    Ok(ElmClassifier {
        norm_stats,
        layer,
        output,
        class_count,
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}

impl ElmClassifier {
    pub fn predict(&self, x: &Matrix) -> Result<LabelVector> {
        if x.cols() != self.norm_stats.dim() {
            return Err(BaselineError::DimMismatch {
                expected: self.norm_stats.dim(),
                got: x.cols(),
            });
        }
        let h = self.layer.forward(&self.norm_stats.apply(x));
        Ok(argmax_labels(&h.matmul(&self.output)))
    }
}

pub fn elm_predict(clf: &ElmClassifier, x: &Matrix) -> Result<LabelVector> {
    clf.predict(x)
}
