//! Out-of-sample network for MvLE embeddings.
//!
//! Each view gets its own two-stage random-feature network:
//!
//! ```text
//! x -> norm -> act(x a1 + b1) = H1 -> H1 g = Z        (guiding layer, ridge fit to Y^i)
//!   Z -> std -> sigmoid(Z a2 + b2) = H2 -> H2 B       (output layer, ridge fit to one-hot labels)
//! ```
//!
//! Only `g` and `B` are learned; `a1, b1, a2, b2` are uniform(-1, 1) draws
//! from a seeded stream. `Z` is the out-of-sample embedding. MvLE coordinates
//! are `D`-orthonormal and therefore tiny, so `Z` is standardized with its
//! training statistics before the second random layer.

use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{LabelVector, MultiViewDataset, NormStats};
use crate::linalg::{ridge_solve, LinalgError, Matrix};
use crate::mvle::{Embedding, FitArtifacts};

#[derive(Debug, Error)]
pub enum MhonError {
    #[error("linalg: {0}")]
    Linalg(#[from] LinalgError),
    #[error("input has {got} columns, model expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("{what}: {left} rows vs {right} rows")]
    RowMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, MhonError>;

/// Elementwise activations, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `x / (1 + |x|)`: continuous, strictly increasing, bounded in (-1, 1).
    Softsign,
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub const NAMES: [&'static str; 5] = ["softsign", "sigmoid", "tanh", "relu", "identity"];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Softsign => x / (1.0 + x.abs()),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Softsign => "softsign",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "softsign" => Ok(Activation::Softsign),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(format!(
                "unknown activation {other:?} (expected one of {})",
                Activation::NAMES.join(", ")
            )),
        }
    }
}

/// A fixed random affine map followed by an activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl RandomLayer {
    /// Draws `inputs x width` weights and `width` biases from uniform(-1, 1).
    pub fn sample(inputs: usize, width: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let weights = Matrix::from_fn(inputs, width, |_, _| rng.random_range(-1.0..1.0));
        let bias = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self {
            weights,
            bias,
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn width(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut h = x.matmul(&self.weights);
        for i in 0..h.rows() {
            for (v, b) in h.row_mut(i).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        h
    }
}

/// Row-wise argmax over class scores, mapped to 1-based labels. Ties go to the
/// lowest class.
pub fn argmax_labels(scores: &Matrix) -> LabelVector {
    LabelVector(
        (0..scores.rows())
            .map(|i| {
                let row = scores.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = j;
                    }
                }
                best + 1
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MhonConfig {
    /// First hidden width; `None` uses `4 * max(d_i, dim)`.
    pub hidden1: Option<usize>,
    pub hidden2: usize,
    pub lambda: f64,
    pub activation: Activation,
    pub seed: u64,
    /// Train one model on the horizontally concatenated (paired) views.
    pub concatenate_views: bool,
}

impl Default for MhonConfig {
    fn default() -> Self {
        Self {
            hidden1: None,
            hidden2: 256,
            lambda: 1e-2,
            activation: Activation::Softsign,
            seed: 0,
            concatenate_views: false,
        }
    }
}

impl MhonConfig {
    pub fn hidden1_for(&self, input_dim: usize, dim: usize) -> usize {
        self.hidden1.unwrap_or(4 * input_dim.max(dim))
    }

    fn validate(&self) -> Result<()> {
        if self.hidden1 == Some(0) || self.hidden2 == 0 {
            return Err(MhonError::InvalidHyper("hidden widths must be >= 1".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(MhonError::InvalidHyper(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhonModel {
    /// The view this model serves; `None` for the concatenated variant.
    pub view_id: Option<usize>,
    pub class_count: usize,
    pub norm_stats: NormStats,
    pub layer1: RandomLayer,
    /// Guiding weights, `h1 x dim`.
    pub guide: Matrix,
    pub guide_stats: NormStats,
    pub layer2: RandomLayer,
    /// Output weights, `h2 x c`.
    pub output: Matrix,
    pub lambda: f64,
    pub seed: u64,
}

impl MhonModel {
    pub fn input_dim(&self) -> usize {
        self.norm_stats.dim()
    }

    pub fn dim(&self) -> usize {
        self.guide.cols()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(MhonError::DimMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        Ok(())
    }

    /// Guiding-layer output: the out-of-sample embedding of raw rows.
    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        Ok(self.layer1.forward(&self.norm_stats.apply(x)).matmul(&self.guide))
    }

    /// Class scores, `n x c`.
    pub fn scores(&self, x: &Matrix) -> Result<Matrix> {
        let z = self.guide_stats.apply(&self.embed(x)?);
        Ok(self.layer2.forward(&z).matmul(&self.output))
    }

    pub fn predict(&self, x: &Matrix) -> Result<LabelVector> {
        Ok(argmax_labels(&self.scores(x)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: MhonModel = serde_json::from_str(s)?;
        let chain_ok = model.layer1.inputs() == model.input_dim()
            && model.layer1.bias.len() == model.layer1.width()
            && model.guide.rows() == model.layer1.width()
            && model.guide_stats.dim() == model.dim()
            && model.layer2.inputs() == model.dim()
            && model.layer2.bias.len() == model.layer2.width()
            && model.output.rows() == model.layer2.width()
            && model.output.cols() == model.class_count
            && model.norm_stats.std.len() == model.input_dim();
        if !chain_ok {
            return Err(MhonError::InvalidHyper(
                "model layer shapes are inconsistent".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| MhonError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| MhonError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&s)
    }
}

/// Trains one network on raw rows `x`, their MvLE coordinates `y` and labels.
///
/// `norm_stats` must be the statistics MvLE fitted on the same view. The
/// random stream is `(cfg.seed, stream)`, so different views draw different
/// weights under one seed.
pub fn train(
    x: &Matrix,
    norm_stats: &NormStats,
    y: &Matrix,
    labels: &LabelVector,
    class_count: usize,
    view_id: Option<usize>,
    cfg: &MhonConfig,
) -> Result<MhonModel> {
    cfg.validate()?;
    if x.rows() != y.rows() {
        return Err(MhonError::RowMismatch {
            what: "features vs embedding",
            left: x.rows(),
            right: y.rows(),
        });
    }
    if x.rows() != labels.len() {
        return Err(MhonError::RowMismatch {
            what: "features vs labels",
            left: x.rows(),
            right: labels.len(),
        });
    }
    if x.cols() != norm_stats.dim() {
        return Err(MhonError::DimMismatch {
            expected: norm_stats.dim(),
            got: x.cols(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(view_id.map_or(u64::MAX, |v| v as u64));

    let h1 = cfg.hidden1_for(x.cols(), y.cols());
    let layer1 = RandomLayer::sample(x.cols(), h1, cfg.activation, &mut rng);
    let hidden1 = layer1.forward(&norm_stats.apply(x));
    let guide = ridge_solve(&hidden1, y, cfg.lambda)?;
    let z = hidden1.matmul(&guide);
    let guide_stats = NormStats::fit(&z);

    let layer2 = RandomLayer::sample(y.cols(), cfg.hidden2, Activation::Sigmoid, &mut rng);
    let hidden2 = layer2.forward(&guide_stats.apply(&z));
    let output = ridge_solve(&hidden2, &labels.one_hot(class_count), cfg.lambda)?;

    Ok(MhonModel {
        view_id,
        class_count,
        norm_stats: norm_stats.clone(),
        layer1,
        guide,
        guide_stats,
        layer2,
        output,
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}

/// Trains the per-view models (or the single concatenated model when
/// `cfg.concatenate_views` is set) from an MvLE fit on `ds`.
pub fn train_all(
    ds: &MultiViewDataset,
    embedding: &Embedding,
    artifacts: &FitArtifacts,
    cfg: &MhonConfig,
) -> Result<Vec<MhonModel>> {
    if cfg.concatenate_views {
        return train_concatenated(ds, embedding, artifacts, cfg).map(|m| vec![m]);
    }
    ds.views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            train(
                v.features(),
                &artifacts.norm_stats[i],
                &embedding.per_view[i],
                &v.labels,
                ds.class_count,
                Some(i),
                cfg,
            )
        })
        .collect()
}

/// Concatenated variant: rows of paired views are joined side by side and
/// guided towards the mean of the paired embedding rows.
fn train_concatenated(
    ds: &MultiViewDataset,
    embedding: &Embedding,
    artifacts: &FitArtifacts,
    cfg: &MhonConfig,
) -> Result<MhonModel> {
    if !ds.is_paired() {
        return Err(MhonError::InvalidHyper(
            "concatenated variant needs paired views with equal labels".into(),
        ));
    }
    let x = concat_views(&ds.views.iter().map(|v| v.features()).collect::<Vec<_>>())?;
    let stats = NormStats {
        mean: artifacts.norm_stats.iter().flat_map(|s| s.mean.clone()).collect(),
        std: artifacts.norm_stats.iter().flat_map(|s| s.std.clone()).collect(),
    };
    let v = embedding.per_view.len() as f64;
    let first = &embedding.per_view[0];
    let y = Matrix::from_fn(first.rows(), first.cols(), |i, j| {
        embedding.per_view.iter().map(|b| b[(i, j)]).sum::<f64>() / v
    });
    train(&x, &stats, &y, &ds.views[0].labels, ds.class_count, None, cfg)
}

/// Joins paired view rows side by side.
pub fn concat_views(views: &[&Matrix]) -> Result<Matrix> {
    Ok(Matrix::hstack(views)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_synthetic, SyntheticSpec};
    use crate::mvle::{fit, MvleConfig};

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            samples_per_class_per_view: 25,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn softsign_values() {
        let f = |x| Activation::Softsign.apply(x);
        assert_eq!(f(0.0), 0.0);
        assert_eq!(f(1.0), 0.5);
        assert_eq!(f(-3.0), -0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a: f64 = rng.random_range(-50.0..50.0);
            let b: f64 = rng.random_range(-50.0..50.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo < hi {
                assert!(f(lo) < f(hi));
            }
            assert!(f(a).abs() < 1.0);
        }
    }

    #[test]
    fn activation_registry() {
        for name in Activation::NAMES {
            let act: Activation = name.parse().unwrap();
            assert_eq!(act.name(), name);
        }
        assert!("raf".parse::<Activation>().is_err());
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
    }

    #[test]
    fn argmax_ties_lowest() {
        let s = Matrix::from_rows(&[[0.2, 0.9, 0.9], [1.0, 1.0, 0.0], [-1.0, -2.0, 0.5]]).unwrap();
        assert_eq!(argmax_labels(&s).0, vec![2, 1, 3]);
    }

    #[test]
    fn interpolation_regime_residual() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let n = ds.views[0].samples();
        let cfg = MhonConfig {
            hidden1: Some(2 * n),
            lambda: 1e-8,
            ..MhonConfig::default()
        };
        let v = &ds.views[0];
        let m = train(v.features(), &art.norm_stats[0], &emb.per_view[0], &v.labels, 4, Some(0), &cfg)
            .unwrap();
        let z = m.embed(v.features()).unwrap();
        let rel = z.sub(&emb.per_view[0]).frobenius_norm() / emb.per_view[0].frobenius_norm();
        assert!(rel < 1e-3, "relative residual {rel}");
    }

    #[test]
    fn same_seed_bit_identical_and_json_round_trip() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let cfg = MhonConfig::default();
        let a = train_all(&ds, &emb, &art, &cfg).unwrap();
        let b = train_all(&ds, &emb, &art, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].layer1.bias, a[1].layer1.bias);
        let back = MhonModel::from_json(&a[1].to_json()).unwrap();
        assert_eq!(back, a[1]);
        let other = train_all(&ds, &emb, &art, &MhonConfig { seed: 9, ..cfg }).unwrap();
        assert_ne!(other[0].layer1.weights, a[0].layer1.weights);
    }

    #[test]
    fn training_accuracy_on_synthetic() {
        let ds = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let models = train_all(&ds, &emb, &art, &MhonConfig::default()).unwrap();
        for (m, v) in models.iter().zip(&ds.views) {
            let pred = m.predict(v.features()).unwrap();
            let hits = pred.0.iter().zip(&v.labels.0).filter(|(a, b)| a == b).count();
            let acc = hits as f64 / v.samples() as f64;
            assert!(acc >= 0.95, "view {:?}: training accuracy {acc}", m.view_id);
        }
    }

    #[test]
    fn single_class_predicts_that_class() {
        let x = Matrix::from_fn(12, 3, |i, j| (i * 3 + j) as f64 * 0.1);
        let y = Matrix::from_fn(12, 2, |i, j| ((i + j) as f64).sin());
        let labels = LabelVector(vec![3; 12]);
        let stats = NormStats::fit(&x);
        let m = train(&x, &stats, &y, &labels, 3, Some(0), &MhonConfig::default()).unwrap();
        let test = Matrix::from_fn(7, 3, |i, j| (i as f64 - j as f64) * 2.0);
        assert!(m.predict(&test).unwrap().0.iter().all(|&l| l == 3));
    }

    #[test]
    fn row_wise_maps() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let m = &train_all(&ds, &emb, &art, &MhonConfig::default()).unwrap()[1];
        let x = ds.views[1].features().slice_rows(0, 5);
        let dup = Matrix::vstack(&[&x, &x.slice_rows(2, 3)]).unwrap();
        let z = m.embed(&dup).unwrap();
        assert_eq!(z.row(5), z.row(2));
        let p = m.predict(&x).unwrap();
        let pd = m.predict(&dup).unwrap();
        assert_eq!(&pd.0[..5], &p.0[..]);
        assert!(matches!(
            m.embed(&Matrix::zeros(2, 3)),
            Err(MhonError::DimMismatch { expected: 15, got: 3 })
        ));
    }

    #[test]
    fn near_training_points_embed_nearby() {
        let spec = SyntheticSpec {
            noise_sigma: 1e-3,
            ..small_spec()
        };
        let ds = gen_synthetic(&spec).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let m = &train_all(&ds, &emb, &art, &MhonConfig::default()).unwrap()[0];
        let x = ds.views[0].features();
        let z_train = m.embed(x).unwrap();
        let scale = z_train.max_abs();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let jitter = Matrix::from_fn(x.rows(), x.cols(), |_, _| rng.random_range(-1e-4..1e-4));
        let z_near = m.embed(&x.add(&jitter)).unwrap();
        // each perturbed point lands closer to its own training image than
        // the typical spread of the embedding
        let gap = z_near.sub(&z_train).max_abs();
        assert!(gap < 1e-2 * scale, "gap {gap} vs scale {scale}");
    }

    #[test]
    fn guiding_residual_shrinks_with_width() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let v = &ds.views[1];
        let target = &emb.per_view[1];
        let mut means = Vec::new();
        for h1 in [32, 64, 128, 256] {
            let mut total = 0.0;
            for seed in 0..5 {
                let cfg = MhonConfig {
                    hidden1: Some(h1),
                    seed,
                    ..MhonConfig::default()
                };
                let m = train(v.features(), &art.norm_stats[1], target, &v.labels, 4, Some(1), &cfg)
                    .unwrap();
                let z = m.embed(v.features()).unwrap();
                total += z.sub(target).frobenius_norm() / target.frobenius_norm();
            }
            means.push(total / 5.0);
        }
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    }

    #[test]
    fn large_lambda_shrinks_guide() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let v = &ds.views[0];
        let norms: Vec<f64> = [1e-3, 1.0, 1e3]
            .iter()
            .map(|&lambda| {
                let cfg = MhonConfig {
                    lambda,
                    ..MhonConfig::default()
                };
                train(v.features(), &art.norm_stats[0], &emb.per_view[0], &v.labels, 4, Some(0), &cfg)
                    .unwrap()
                    .guide
                    .frobenius_norm()
            })
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
        assert!(norms[2] < 0.1 * norms[0], "{norms:?}");
    }

    #[test]
    fn concatenated_variant() {
        let ds = gen_synthetic(&small_spec()).unwrap();
        let (emb, art) = fit(&ds, &MvleConfig::default()).unwrap();
        let cfg = MhonConfig {
            concatenate_views: true,
            ..MhonConfig::default()
        };
        let models = train_all(&ds, &emb, &art, &cfg).unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].view_id, None);
        assert_eq!(models[0].input_dim(), 35);
        let x = concat_views(&[ds.views[0].features(), ds.views[1].features()]).unwrap();
        assert_eq!(models[0].predict(&x).unwrap().len(), 100);
    }

    #[test]
    fn rejects_bad_hyper() {
        let x = Matrix::zeros(3, 2);
        let stats = NormStats::identity(2);
        let labels = LabelVector(vec![1, 1, 1]);
        for cfg in [
            MhonConfig { lambda: 0.0, ..MhonConfig::default() },
            MhonConfig { hidden2: 0, ..MhonConfig::default() },
        ] {
            assert!(matches!(
                train(&x, &stats, &Matrix::zeros(3, 1), &labels, 1, Some(0), &cfg),
                Err(MhonError::InvalidHyper(_))
            ));
        }
        assert!(matches!(
            train(&x, &stats, &Matrix::zeros(2, 1), &labels, 1, Some(0), &MhonConfig::default()),
            Err(MhonError::RowMismatch { .. })
        ));
    }
}
