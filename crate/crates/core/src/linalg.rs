//! Dense row-major matrices and the symmetric kernels the rest of the crate
//! is built on: a tridiagonal-QL eigensolver, the diagonal-metric generalized
//! eigenproblem used by Laplacian eigenmaps, a Cholesky-reduced
//! symmetric-definite eigenproblem for the discriminant baselines, and ridge
//! least squares.
//!
//! Every matrix in the pipeline is real symmetric or rectangular, so no
//! nonsymmetric eigen path exists here.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance applied to inputs (symmetry checks, singular pivots).
pub const INPUT_TOL: f64 = 1e-10;
/// Tolerance the decompositions are expected to meet on their outputs.
pub const RESULT_TOL: f64 = 1e-8;

const MAX_QL_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must be at least 1x1, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("rows have unequal lengths (row {row} has {len}, expected {expected})")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max relative asymmetry {asymmetry:.3e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("eigen iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("degree {index} is {value}, expected a strictly positive diagonal")]
    SingularDegree { index: usize, value: f64 },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("ridge penalty must be finite and nonnegative, got {0}")]
    NegativePenalty(f64),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense matrix of `f64`, row-major: entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = LinalgError;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let expected = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * expected);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != expected {
                return Err(LinalgError::Ragged {
                    row: i,
                    len: r.len(),
                    expected,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), expected, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// A single column as an `n x 1` matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows, "column length mismatch");
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                t.data[j * self.rows + i] = v;
            }
        }
        t
    }

    /// `self * other`.
    ///
    /// # Panics
    /// If the inner dimensions disagree.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {:?} x {:?}",
            self.shape(),
            other.shape()
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.rows, other.rows,
            "t_matmul: {:?}ᵀ x {:?}",
            self.shape(),
            other.shape()
        );
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.cols,
            "matmul_t: {:?} x {:?}ᵀ",
            self.shape(),
            other.shape()
        );
        Self::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec length mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "elementwise shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add_to_diag(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        assert!(start < end && end <= self.rows, "row range out of bounds");
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        assert!(!idx.is_empty(), "empty row selection");
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns `start..end` as a new matrix.
    pub fn slice_cols(&self, start: usize, end: usize) -> Matrix {
        assert!(start < end && end <= self.cols, "column range out of bounds");
        Matrix::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    /// Concatenates row blocks that share a column count.
    pub fn vstack(blocks: &[&Matrix]) -> Result<Matrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(LinalgError::DimMismatch {
                    op: "vstack",
                    left: (rows, cols),
                    right: b.shape(),
                });
            }
            rows += b.rows;
            data.extend_from_slice(&b.data);
        }
        Matrix::new(rows, cols, data)
    }

    /// Concatenates column blocks that share a row count.
    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(LinalgError::DimMismatch {
                op: "hstack",
                left: (rows, 0),
                right: b.shape(),
            });
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Matrix::new(rows, cols, data)
    }

    /// Largest `|a_ij - a_ji|` relative to `max(1, max|a|)`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs().max(1.0);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    fn require_square(&self) -> Result<usize> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    /// Validated, exactly symmetric copy `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Result<Matrix> {
        let n = self.require_square()?;
        let asymmetry = self.asymmetry();
        if asymmetry > INPUT_TOL {
            return Err(LinalgError::NonSymmetric { asymmetry });
        }
        let mut s = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(s)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Flips each column so its largest-magnitude entry (first on ties) is
/// positive, making eigenvector signs reproducible.
pub fn fix_column_signs(m: &mut Matrix) {
    for j in 0..m.cols() {
        let mut pivot = 0.0_f64;
        for i in 0..m.rows() {
            if m[(i, j)].abs() > pivot.abs() {
                pivot = m[(i, j)];
            }
        }
        if pivot < 0.0 {
            for i in 0..m.rows() {
                m[(i, j)] = -m[(i, j)];
            }
        }
    }
}

/// Eigenpairs sorted by ascending eigenvalue; column `j` of `vectors` pairs
/// with `values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenResult {
    /// Reorders to descending eigenvalue (for maximization problems).
    pub fn into_descending(mut self) -> EigenResult {
        let n = self.values.len();
        self.values.reverse();
        let v = &self.vectors;
        self.vectors = Matrix::from_fn(v.rows(), n, |i, j| v[(i, n - 1 - j)]);
        self
    }
}

/// Eigendecomposition of a real symmetric matrix by Householder
/// tridiagonalization followed by implicit QL with Wilkinson-style shifts.
///
/// The input is symmetrized as `(A + Aᵀ)/2` after checking that the relative
/// asymmetry is within [`INPUT_TOL`].
pub fn sym_eig(a: &Matrix) -> Result<EigenResult> {
    let s = a.symmetrized()?;
    let n = s.rows();
    let mut v = s.into_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e)?;
    Ok(EigenResult {
        values: d,
        vectors: Matrix {
            rows: n,
            cols: n,
            data: v,
        },
    })
}

// Householder reduction to tridiagonal form (after the EISPACK tred2 routine
// as distributed with JAMA). On exit `v` holds the accumulated orthogonal
// transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e), accumulating rotations into `v`.
// Eigenpairs come out sorted ascending.
fn ql_implicit(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(LinalgError::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[at(k, i + 1)];
                        let vk = v[at(k, i)];
                        v[at(k, i + 1)] = s * vk + c * vk1;
                        v[at(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                v.swap(at(j, i), at(j, k));
            }
        }
    }
    Ok(())
}

/// Solves `L y = λ D y` for symmetric `L` and a strictly positive diagonal `D`
/// given by `degrees`.
///
/// Works on the similar symmetric matrix `D^{-1/2} L D^{-1/2}` and maps the
/// eigenvectors back with `D^{-1/2}`, so the returned vectors satisfy
/// `Yᵀ D Y = I`.
pub fn generalized_eig_diag(l: &Matrix, degrees: &[f64]) -> Result<EigenResult> {
    let n = l.require_square()?;
    if degrees.len() != n {
        return Err(LinalgError::DimMismatch {
            op: "generalized_eig_diag",
            left: l.shape(),
            right: (degrees.len(), degrees.len()),
        });
    }
    if let Some((index, &value)) = degrees
        .iter()
        .enumerate()
        .find(|(_, &d)| !(d > 0.0) || !d.is_finite())
    {
        return Err(LinalgError::SingularDegree { index, value });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let scaled = Matrix::from_fn(n, n, |i, j| l[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let mut eig = sym_eig(&scaled)?;
    for i in 0..n {
        for x in eig.vectors.row_mut(i) {
            *x *= inv_sqrt[i];
        }
    }
    Ok(eig)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.require_square()?;
    let scale = a.diag().iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= INPUT_TOL * INPUT_TOL * scale {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_substitute(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᵀ X = B` for lower-triangular `L`.
fn backward_substitute_t(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimMismatch {
            op: "solve_spd",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let l = cholesky(a)?;
    let y = forward_substitute(&l, b);
    Ok(backward_substitute_t(&l, &y))
}

/// Symmetric-definite generalized eigenproblem `A x = λ B x`, reduced through
/// the Cholesky factor of `B`. Eigenvalues ascend; vectors satisfy `Xᵀ B X = I`.
pub fn generalized_sym_eig(a: &Matrix, b: &Matrix) -> Result<EigenResult> {
    let n = a.require_square()?;
    if b.shape() != (n, n) {
        return Err(LinalgError::DimMismatch {
            op: "generalized_sym_eig",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let a = a.symmetrized()?;
    let l = cholesky(&b.symmetrized()?)?;
    // C = L⁻¹ A L⁻ᵀ
    let half = forward_substitute(&l, &a);
    let c = forward_substitute(&l, &half.transpose());
    let eig = sym_eig(&c.symmetrized_lossy())?;
    let vectors = backward_substitute_t(&l, &eig.vectors);
    Ok(EigenResult {
        values: eig.values,
        vectors,
    })
}

impl Matrix {
    // Triangular solves leave ulp-level asymmetry proportional to the
    // conditioning of the factor; average it away without re-checking.
    fn symmetrized_lossy(&self) -> Matrix {
        let n = self.rows;
        Matrix::from_fn(n, n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }
}

/// Ridge least squares: `argmin_B ‖H B − T‖²_F + λ‖B‖²_F = (HᵀH + λI)⁻¹ HᵀT`.
///
/// When `H` has more columns than rows the equivalent dual form
/// `Hᵀ (HHᵀ + λI)⁻¹ T` is solved instead, which is far better conditioned in
/// the interpolation regime.
pub fn ridge_solve(h: &Matrix, t: &Matrix, lambda: f64) -> Result<Matrix> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(LinalgError::NegativePenalty(lambda));
    }
    if h.rows() != t.rows() {
        return Err(LinalgError::DimMismatch {
            op: "ridge_solve",
            left: h.shape(),
            right: t.shape(),
        });
    }
    let singular = |e: LinalgError| match e {
        LinalgError::NotPositiveDefinite => LinalgError::Singular,
        other => other,
    };
    if h.cols() <= h.rows() {
        let mut gram = h.t_matmul(h);
        gram.add_to_diag(lambda);
        let rhs = h.t_matmul(t);
        solve_spd(&gram, &rhs).map_err(singular)
    } else {
        let mut gram = h.matmul_t(h);
        gram.add_to_diag(lambda);
        let alpha = solve_spd(&gram, t).map_err(singular)?;
        Ok(h.t_matmul(&alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a.add(&a.transpose()).scale(0.5)
    }

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Matrix::new(0, 2, vec![]),
            Err(LinalgError::Empty { .. })
        ));
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(LinalgError::Ragged { row: 1, .. })
        ));
    }

    #[test]
    fn serde_rejects_wrong_length() {
        let bad = r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = sym_eig(&Matrix::identity(3)).unwrap();
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let eig = sym_eig(&a).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = eig.vectors.column(0);
        let v1 = eig.vectors.column(1);
        assert!((dot(&v0, &[s, s]).abs() - 1.0).abs() < 1e-12);
        assert!((dot(&v1, &[s, -s]).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let eig = sym_eig(&Matrix::new(1, 1, vec![4.5]).unwrap()).unwrap();
        assert_eq!(eig.values, vec![4.5]);
        assert_eq!(eig.vectors.as_slice(), &[1.0]);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let a = random_symmetric(10, seed);
            let eig = sym_eig(&a).unwrap();
            let v = &eig.vectors;
            let lam = Matrix::from_diag(&eig.values);
            let recon = v.matmul(&lam).matmul_t(v);
            assert!(recon.sub(&a).max_abs() < 1e-8 * a.norm_inf().max(1.0));
            let gram = v.t_matmul(v);
            assert!(gram.sub(&Matrix::identity(10)).max_abs() < 1e-8);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let trace_gap = (eig.values.iter().sum::<f64>() - a.trace()).abs();
            assert!(trace_gap < 1e-8 * a.norm_inf().max(1.0));
        }
    }

    #[test]
    fn residuals_within_tolerance() {
        let a = random_symmetric(25, 42);
        let eig = sym_eig(&a).unwrap();
        let bound = RESULT_TOL * a.norm_inf();
        for j in 0..25 {
            let v = eig.vectors.column(j);
            let av = a.matvec(&v);
            for (x, y) in av.iter().zip(&v) {
                assert!((x - eig.values[j] * y).abs() <= bound);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(LinalgError::NonSymmetric { .. })));
        let ulp = Matrix::from_rows(&[[1.0, 2.0], [2.0 + 1e-15, 1.0]]).unwrap();
        assert!(sym_eig(&ulp).is_ok());
    }

    #[test]
    fn generalized_reduces_to_standard_with_identity_degree() {
        let l = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let eig = generalized_eig_diag(&l, &[1.0, 1.0]).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_scaling_identity() {
        let l = Matrix::from_rows(&[[2.0, -2.0], [-2.0, 2.0]]).unwrap();
        let eig = generalized_eig_diag(&l, &[2.0, 2.0]).unwrap();
        assert!(eig.values[0].abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        let first = eig.vectors.column(0);
        assert!((first[0] - first[1]).abs() < 1e-14);
        // D-normalized: 2 (a² + a²) = 1
        assert!((4.0 * first[0] * first[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_rejects_nonpositive_degree() {
        let l = Matrix::identity(2);
        assert!(matches!(
            generalized_eig_diag(&l, &[1.0, 0.0]),
            Err(LinalgError::SingularDegree { index: 1, .. })
        ));
    }

    #[test]
    fn generalized_sym_eig_b_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_symmetric(6, 9);
        let r = random_matrix(6, 6, &mut rng);
        let mut b = r.t_matmul(&r);
        b.add_to_diag(0.5);
        let eig = generalized_sym_eig(&a, &b).unwrap();
        let x = &eig.vectors;
        let gram = x.t_matmul(&b.matmul(x));
        assert!(gram.sub(&Matrix::identity(6)).max_abs() < 1e-8);
        let lhs = a.matmul(x);
        let rhs = b.matmul(x).matmul(&Matrix::from_diag(&eig.values));
        assert!(lhs.sub(&rhs).max_abs() < 1e-8);
    }

    #[test]
    fn ridge_identity_design() {
        let t = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let b = ridge_solve(&Matrix::identity(3), &t, 0.0).unwrap();
        assert!(b.sub(&t).max_abs() < 1e-14);
        let half = ridge_solve(&Matrix::identity(3), &t, 1.0).unwrap();
        assert!(half.sub(&t.scale(0.5)).max_abs() < 1e-14);
    }

    #[test]
    fn ridge_singular_without_penalty() {
        let h = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let t = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert_eq!(ridge_solve(&h, &t, 0.0), Err(LinalgError::Singular));
        assert!(ridge_solve(&h, &t, 0.1).is_ok());
        assert!(matches!(
            ridge_solve(&h, &t, -1.0),
            Err(LinalgError::NegativePenalty(_))
        ));
    }

    fn ridge_objective(h: &Matrix, t: &Matrix, b: &Matrix, lambda: f64) -> f64 {
        let r = h.matmul(b).sub(t).frobenius_norm();
        r * r + lambda * b.frobenius_norm().powi(2)
    }

    #[test]
    fn ridge_gradient_vanishes_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_matrix(20, 5, &mut rng);
        let t = random_matrix(20, 3, &mut rng);
        let lambda = 0.1;
        let b = ridge_solve(&h, &t, lambda).unwrap();
        let step = 1e-6;
        for i in 0..5 {
            for j in 0..3 {
                let mut plus = b.clone();
                plus[(i, j)] += step;
                let mut minus = b.clone();
                minus[(i, j)] -= step;
                let grad = (ridge_objective(&h, &t, &plus, lambda)
                    - ridge_objective(&h, &t, &minus, lambda))
                    / (2.0 * step);
                assert!(grad.abs() < 1e-8, "gradient ({i},{j}) = {grad:e}");
            }
        }
    }

    #[test]
    fn ridge_solution_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = random_matrix(15, 4, &mut rng);
        let t = random_matrix(15, 2, &mut rng);
        let lambda = 0.3;
        let b = ridge_solve(&h, &t, lambda).unwrap();
        let best = ridge_objective(&h, &t, &b, lambda);
        for _ in 0..100 {
            let dir = random_matrix(4, 2, &mut rng).scale(1e-3);
            assert!(best <= ridge_objective(&h, &t, &b.add(&dir), lambda));
        }
    }

    #[test]
    fn ridge_dual_form_matches_primal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = random_matrix(6, 10, &mut rng);
        let t = random_matrix(6, 2, &mut rng);
        let dual = ridge_solve(&h, &t, 0.5).unwrap();
        let mut gram = h.t_matmul(&h);
        gram.add_to_diag(0.5);
        let primal = solve_spd(&gram, &h.t_matmul(&t)).unwrap();
        assert!(dual.sub(&primal).max_abs() < 1e-10);
    }

    #[test]
    fn stacking() {
        let a = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let v = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(v.shape(), (2, 2));
        let h = Matrix::hstack(&[&v, &v]).unwrap();
        assert_eq!(h.row(1), &[3.0, 4.0, 3.0, 4.0]);
        assert!(Matrix::hstack(&[&a, &v]).is_err());
    }
}
