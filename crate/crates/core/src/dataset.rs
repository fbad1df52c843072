//! Multi-view dataset container, CSV ingestion, z-score normalization,
//! stratified splitting and the synthetic generator used by the benchmarks.
//!
//! CSV layout: no header, `,` separator, `.` decimal point, one sample per
//! row. Label files hold one positive integer class id per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: row {row} has {len} fields, expected {expected}")]
    RaggedRows {
        path: String,
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("{path}: cell ({row}, {col}) is not a finite number: {cell:?}")]
    NonNumericCell {
        path: String,
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("label {label:?} at line {line} is not a class id in 1..={max}")]
    LabelOutOfRange {
        line: usize,
        label: String,
        max: usize,
    },
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{path} contains no rows")]
    EmptyFile { path: String },
    #[error("view {view}: class {class} has {count} samples, at least 2 required")]
    ClassTooSmall {
        view: usize,
        class: usize,
        count: usize,
    },
    #[error("train fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Features of one view, `n_i x d_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMatrix {
    pub view_id: usize,
    pub features: Matrix,
}

impl ViewMatrix {
    pub fn new(view_id: usize, features: Matrix) -> Self {
        Self { view_id, features }
    }

    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Class ids of one view's samples, drawn from `1..=c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector(pub Vec<usize>);

impl LabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max_class(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Sample count per class, indexed by `class - 1`.
    pub fn histogram(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        for &l in &self.0 {
            if (1..=class_count).contains(&l) {
                counts[l - 1] += 1;
            }
        }
        counts
    }

    /// Row indices per class, indexed by `class - 1`.
    pub fn class_indices(&self, class_count: usize) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); class_count];
        for (i, &l) in self.0.iter().enumerate() {
            groups[l - 1].push(i);
        }
        groups
    }

    pub fn select(&self, idx: &[usize]) -> LabelVector {
        LabelVector(idx.iter().map(|&i| self.0[i]).collect())
    }

    /// `n x c` one-hot encoding.
    pub fn one_hot(&self, class_count: usize) -> Matrix {
        Matrix::from_fn(self.len(), class_count, |i, j| {
            if self.0[i] == j + 1 {
                1.0
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledView {
    pub data: ViewMatrix,
    pub labels: LabelVector,
}

impl LabeledView {
    pub fn features(&self) -> &Matrix {
        &self.data.features
    }

    pub fn samples(&self) -> usize {
        self.data.samples()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }
}

/// `v` views that share the class set `1..=class_count`. Sample counts and
/// feature dimensions may differ between views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiViewDataset {
    pub views: Vec<LabeledView>,
    pub class_count: usize,
}

impl MultiViewDataset {
    pub fn new(views: Vec<LabeledView>, class_count: usize) -> Result<Self> {
        if views.is_empty() {
            return Err(DatasetError::LengthMismatch {
                what: "views",
                expected: 1,
                got: 0,
            });
        }
        for v in &views {
            if v.labels.len() != v.samples() {
                return Err(DatasetError::LengthMismatch {
                    what: "labels",
                    expected: v.samples(),
                    got: v.labels.len(),
                });
            }
            if let Some((line, &l)) = v
                .labels
                .0
                .iter()
                .enumerate()
                .find(|(_, &l)| l == 0 || l > class_count)
            {
                return Err(DatasetError::LabelOutOfRange {
                    line: line + 1,
                    label: l.to_string(),
                    max: class_count,
                });
            }
        }
        Ok(Self { views, class_count })
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn total_samples(&self) -> usize {
        self.views.iter().map(LabeledView::samples).sum()
    }

    /// True when every view has the same label sequence, i.e. row `a` of each
    /// view describes the same underlying object.
    pub fn is_paired(&self) -> bool {
        self.views.windows(2).all(|w| w[0].labels == w[1].labels)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> DatasetError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.display().to_string(),
            source,
        },
        other => DatasetError::Csv {
            path: path.display().to_string(),
            message: format!("{other:?}"),
        },
    }
}

/// Reads a headerless numeric CSV into a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DatasetError::RaggedRows {
                path: path.display().to_string(),
                row: row + 1,
                len: record.len(),
                expected,
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DatasetError::NonNumericCell {
                    path: path.display().to_string(),
                    row: row + 1,
                    col: col + 1,
                    cell: cell.to_string(),
                })?;
            data.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DatasetError::EmptyFile {
            path: path.display().to_string(),
        });
    }
    Ok(Matrix::new(rows, cols.unwrap_or(0), data)?)
}

/// Writes a matrix as headerless CSV. Values use the shortest decimal form
/// that parses back to the same `f64`.
pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for i in 0..m.rows() {
        let line = m
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_labels(path: &Path, max_class: Option<usize>) -> Result<LabelVector> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut labels = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        let cell = raw.trim();
        if cell.is_empty() {
            continue;
        }
        let max = max_class.unwrap_or(usize::MAX);
        match cell.parse::<usize>() {
            Ok(l) if l >= 1 && l <= max => labels.push(l),
            _ => {
                return Err(DatasetError::LabelOutOfRange {
                    line: line + 1,
                    label: cell.to_string(),
                    max,
                })
            }
        }
    }
    Ok(LabelVector(labels))
}

/// Loads one view from a feature CSV and its label file.
pub fn load_view_csv(
    features_path: &Path,
    labels_path: &Path,
    view_id: usize,
) -> Result<(ViewMatrix, LabelVector)> {
    let features = read_matrix_csv(features_path)?;
    let labels = read_labels(labels_path, None)?;
    if labels.len() != features.rows() {
        return Err(DatasetError::LengthMismatch {
            what: "labels",
            expected: features.rows(),
            got: labels.len(),
        });
    }
    Ok((ViewMatrix::new(view_id, features), labels))
}

pub fn write_view_csv(
    features_path: &Path,
    labels_path: &Path,
    view: &ViewMatrix,
    labels: &LabelVector,
) -> Result<()> {
    write_matrix_csv(features_path, &view.features)?;
    let file = File::create(labels_path).map_err(io_err(labels_path))?;
    let mut w = BufWriter::new(file);
    for l in labels.as_slice() {
        writeln!(w, "{l}").map_err(io_err(labels_path))?;
    }
    w.flush().map_err(io_err(labels_path))
}

/// Per-feature mean and population standard deviation fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows() as f64;
        let d = x.cols();
        let mut mean = vec![0.0; d];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // Constant columns get unit scale so they map to zeros.
        let std = var
            .iter()
            .zip(&mean)
            .map(|(&s, &m): (&f64, &f64)| {
                let sd = (s / n).sqrt();
                if sd <= 1e-12 * m.abs().max(1.0) {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.dim(), "normalization dimension mismatch");
        Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.std[j]
        })
    }

    /// Statistics that leave data unchanged.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }
}

/// Z-scores each column with population statistics and returns them so test
/// data can be mapped with the training fit.
pub fn zscore_normalize(view: &ViewMatrix) -> (ViewMatrix, NormStats) {
    let stats = NormStats::fit(&view.features);
    (
        ViewMatrix::new(view.view_id, stats.apply(&view.features)),
        stats,
    )
}

/// Train/test row indices of one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Number of training samples for a class of `count` samples. The result is
/// `⌈fraction·count⌉` clamped so both sides keep at least one sample.
pub fn train_count(count: usize, fraction: f64) -> usize {
    let raw = (fraction * count as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.clamp(1, count.saturating_sub(1).max(1))
}

/// Stratified per-view shuffle split.
///
/// Each view's class groups are shuffled with an RNG seeded from `seed`
/// alone, so views with identical label sequences (paired views) receive the
/// same partition and stay row-aligned.
pub fn split_indices(
    ds: &MultiViewDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<SplitIndices>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    ds.views
        .iter()
        .enumerate()
        .map(|(v, view)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (c, mut members) in view
                .labels
                .class_indices(ds.class_count)
                .into_iter()
                .enumerate()
            {
                if members.len() < 2 {
                    return Err(DatasetError::ClassTooSmall {
                        view: v,
                        class: c + 1,
                        count: members.len(),
                    });
                }
                members.shuffle(&mut rng);
                let k = train_count(members.len(), train_fraction);
                train.extend_from_slice(&members[..k]);
                test.extend_from_slice(&members[k..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Ok(SplitIndices { train, test })
        })
        .collect()
}

pub fn subset(ds: &MultiViewDataset, idx: &[Vec<usize>]) -> MultiViewDataset {
    let views = ds
        .views
        .iter()
        .zip(idx)
        .map(|(view, rows)| LabeledView {
            data: ViewMatrix::new(view.data.view_id, view.features().select_rows(rows)),
            labels: view.labels.select(rows),
        })
        .collect();
    MultiViewDataset {
        views,
        class_count: ds.class_count,
    }
}

/// Stratified split into `(train, test)`; see [`split_indices`].
pub fn split(
    ds: &MultiViewDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(MultiViewDataset, MultiViewDataset)> {
    let parts = split_indices(ds, train_fraction, seed)?;
    let train: Vec<_> = parts.iter().map(|p| p.train.clone()).collect();
    let test: Vec<_> = parts.iter().map(|p| p.test.clone()).collect();
    Ok((subset(ds, &train), subset(ds, &test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    Linear,
    SwissrollLike,
}

impl std::str::FromStr for Nonlinearity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "swissroll-like" => Ok(Self::SwissrollLike),
            other => Err(format!(
                "unknown nonlinearity {other:?} (expected linear or swissroll-like)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub samples_per_class_per_view: usize,
    pub view_dims: Vec<usize>,
    pub noise_sigma: f64,
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            class_count: 4,
            samples_per_class_per_view: 60,
            view_dims: vec![20, 15],
            noise_sigma: 0.3,
            nonlinearity: Nonlinearity::SwissrollLike,
            seed: 0,
        }
    }
}

/// Radius of the circle the class anchors sit on in latent space.
const ANCHOR_RADIUS: f64 = 1.0;
/// Within-class latent scatter radius, as a fraction of the largest radius
/// that keeps every within-class pair closer than every between-class pair.
const SPREAD_FRACTION: f64 = 0.95;
/// Angular frequency of the sinusoidal warp.
const WARP_FREQUENCY: f64 = 4.0;

/// Lifts a 2-D latent point to the nonlinear feature basis of the warped
/// views: each coordinate is bent by a sinusoid of the other, plus the
/// sinusoids themselves.
fn warp(z: [f64; 2]) -> [f64; 4] {
    let (s0, s1) = ((WARP_FREQUENCY * z[0]).sin(), (WARP_FREQUENCY * z[1]).sin());
    [z[0] + 0.5 * s1, z[1] + 0.5 * s0, s0, s1]
}

/// Draws a paired multi-view dataset from class anchors in a 2-D latent space.
///
/// Every view observes the same latent points (so labels agree row by row).
/// View 0 is a random linear lift of the latents; with
/// [`Nonlinearity::SwissrollLike`] every further view applies a
/// coordinate-wise sinusoidal warp before its random linear map. Each view
/// gets independent Gaussian noise of scale `noise_sigma`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset> {
    if spec.class_count < 2 {
        return Err(DatasetError::InvalidSpec("class_count must be >= 2".into()));
    }
    if spec.samples_per_class_per_view < 1 {
        return Err(DatasetError::InvalidSpec(
            "samples_per_class_per_view must be >= 1".into(),
        ));
    }
    if spec.view_dims.is_empty() || spec.view_dims.iter().any(|&d| d < 2) {
        return Err(DatasetError::InvalidSpec(
            "need at least one view and every view dim >= 2".into(),
        ));
    }
    if !(spec.noise_sigma >= 0.0) || !spec.noise_sigma.is_finite() {
        return Err(DatasetError::InvalidSpec(
            "noise_sigma must be finite and >= 0".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (latents, labels): (Vec<[f64; 2]>, Vec<usize>) =
        draw_latents(spec, &mut rng).into_iter().unzip();
    let n = latents.len();
    let c = spec.class_count;

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let mut views = Vec::with_capacity(spec.view_dims.len());
    for (v, &dim) in spec.view_dims.iter().enumerate() {
        let nonlinear = v > 0 && spec.nonlinearity == Nonlinearity::SwissrollLike;
        let basis: Vec<Vec<f64>> = latents
            .iter()
            .map(|&z| if nonlinear { warp(z).to_vec() } else { z.to_vec() })
            .collect();
        let width = basis[0].len();
        let scale = 1.0 / (width as f64).sqrt();
        let lift = Matrix::from_fn(width, dim, |_, _| standard.sample(&mut rng) * scale);
        let mut features = Matrix::from_rows(&basis)?.matmul(&lift);
        if spec.noise_sigma > 0.0 {
            for i in 0..n {
                for x in features.row_mut(i) {
                    *x += noise.sample(&mut rng);
                }
            }
        }
        views.push(LabeledView {
            data: ViewMatrix::new(v, features),
            labels: LabelVector(labels.clone()),
        });
    }
    MultiViewDataset::new(views, c)
}

/// Latent coordinates used by [`gen_synthetic`], regenerated from the same
/// seed. Exposed for diagnostics and tests.
pub fn synthetic_latents(spec: &SyntheticSpec) -> Vec<([f64; 2], usize)> {
    draw_latents(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

// Anchors sit on a circle; adjacent anchors are 2R·sin(π/c) apart, so a
// scatter radius below R·sin(π/c)/2 keeps every class pair disjoint.
fn draw_latents(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<([f64; 2], usize)> {
    let c = spec.class_count;
    let spacing = 2.0 * ANCHOR_RADIUS * (std::f64::consts::PI / c as f64).sin();
    let spread = SPREAD_FRACTION * spacing / 4.0;
    let mut out = Vec::with_capacity(c * spec.samples_per_class_per_view);
    for class in 0..c {
        let angle = 2.0 * std::f64::consts::PI * class as f64 / c as f64;
        let anchor = [ANCHOR_RADIUS * angle.cos(), ANCHOR_RADIUS * angle.sin()];
        for _ in 0..spec.samples_per_class_per_view {
            // uniform in a disc
            let r = spread * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            out.push((
                [anchor[0] + r * theta.cos(), anchor[1] + r * theta.sin()],
                class + 1,
            ));
        }
    }
    out
}

/// Groups a label sequence into `class -> count`, useful for summaries.
pub fn label_summary(labels: &LabelVector) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &l in labels.as_slice() {
        *m.entry(l).or_insert(0) += 1;
    }
    m
}
