//! Repeated stratified-split evaluation of MvLE+MHON against the baselines.
//!
//! Repeat `r` uses seed `seed + r` for the split, MHON and ELM weights. Each
//! linear method projects both train and test rows and scores them with an
//! ELM; `raw` scores the unprojected features.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    cca_lda_fit, elm_train, mvda_fit, pls_fit, BaselineError, ElmConfig, LinearProjector,
};
use crate::dataset::{split, DatasetError, MultiViewDataset};
use crate::metrics::{EvalReport, MetricsError, ViewEval};
use crate::mhon::{train_all, MhonConfig, MhonError};
use crate::mvle::{fit, MvleConfig, MvleError};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("unknown method {0:?} (expected one of mvle, cca-lda, pls, mvda, mvda-vc, raw)")]
    UnknownMethod(String),
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("mvle: {0}")]
    Mvle(#[from] MvleError),
    #[error("mhon: {0}")]
    Mhon(#[from] MhonError),
    #[error("baselines: {0}")]
    Baseline(#[from] BaselineError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

type Result<T> = std::result::Result<T, BenchmarkError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mvle,
    CcaLda,
    Pls,
    Mvda,
    MvdaVc,
    Raw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mvle,
        Method::CcaLda,
        Method::Pls,
        Method::Mvda,
        Method::MvdaVc,
        Method::Raw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mvle => "mvle",
            Method::CcaLda => "cca-lda",
            Method::Pls => "pls",
            Method::Mvda => "mvda",
            Method::MvdaVc => "mvda-vc",
            Method::Raw => "raw",
        }
    }

    /// Whether the method can run on `ds` at all.
    pub fn applicable(self, ds: &MultiViewDataset) -> bool {
        let paired = ds.view_count() == 2 && ds.is_paired();
        match self {
            Method::CcaLda | Method::Pls => paired,
            Method::MvdaVc => ds.views.iter().all(|v| v.dim() == ds.views[0].dim()),
            Method::Mvle | Method::Mvda | Method::Raw => true,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchmarkError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub k: usize,
    pub heat_t: Option<f64>,
    pub dims: Vec<usize>,
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    /// `None` runs every method applicable to the dataset.
    pub methods: Option<Vec<Method>>,
    pub mhon: MhonConfig,
    pub elm_hidden: usize,
    pub elm_lambda: f64,
    pub vc_lambda: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            k: 10,
            heat_t: None,
            dims: vec![2, 4, 8, 16],
            train_fraction: 2.0 / 3.0,
            repeats: 5,
            seed: 0,
            methods: None,
            mhon: MhonConfig::default(),
            elm_hidden: 256,
            elm_lambda: 1e-2,
            vc_lambda: 1.0,
        }
    }
}

impl BenchmarkConfig {
    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.repeats == 0 || self.dims.is_empty() || self.dims.contains(&0) {
            return Err(BenchmarkError::InvalidConfig(
                "k, repeats and every dim must be positive".into(),
            ));
        }
        if self.elm_hidden == 0 || !(self.elm_lambda > 0.0) || !(self.vc_lambda >= 0.0) {
            return Err(BenchmarkError::InvalidConfig(
                "elm_hidden, elm_lambda must be positive and vc_lambda >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn resolved_methods(&self, ds: &MultiViewDataset) -> Result<Vec<Method>> {
        match &self.methods {
            Some(list) => {
                for m in list {
                    if !m.applicable(ds) {
                        return Err(BenchmarkError::InvalidConfig(format!(
                            "method {m} cannot run on this dataset"
                        )));
                    }
                }
                let mut list = list.clone();
                list.sort();
                list.dedup();
                Ok(list)
            }
            None => Ok(Method::ALL.into_iter().filter(|m| m.applicable(ds)).collect()),
        }
    }
}

/// One accuracy measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub method: Method,
    /// 1-based view number.
    pub view: usize,
    /// Requested dimension (the view's feature count for `raw`).
    pub dim: usize,
    /// Dimension the method actually produced after rank caps.
    pub effective_dim: usize,
    pub repeat: usize,
    pub seed: u64,
    pub accuracy: f64,
}

/// A row of the aggregated report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub view: usize,
    pub dim: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub measurements: Vec<Measurement>,
    pub evaluations: Vec<EvalReport>,
    pub repeat_seeds: Vec<u64>,
}

impl BenchmarkReport {
    pub fn row(&self, method: Method, view: usize, dim: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method.name() && r.view == view && r.dim == dim)
    }

    /// Raw-feature reference row of a view (its `dim` is the feature count).
    pub fn raw_row(&self, view: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == Method::Raw.name() && r.view == view)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| BenchmarkError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        for row in &self.rows {
            w.serialize(row).map_err(io)?;
        }
        w.flush().map_err(|e| BenchmarkError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Rank cap applied to `dim` for each linear method.
fn effective_dim(method: Method, ds: &MultiViewDataset, dim: usize) -> usize {
    let dims: Vec<usize> = ds.views.iter().map(|v| v.dim()).collect();
    match method {
        Method::CcaLda => dim.min(dims[0]).min(dims[1]).min(ds.class_count - 1),
        Method::Pls => dim.min(dims[0]).min(dims[1]),
        Method::Mvda | Method::MvdaVc => dim.min(dims.iter().sum()),
        Method::Mvle | Method::Raw => dim,
    }
}

struct Scored {
    view: usize,
    effective_dim: usize,
    eval: ViewEval,
}

fn score_linear(
    projector: &LinearProjector,
    train: &MultiViewDataset,
    test: &MultiViewDataset,
    elm: &ElmConfig,
) -> Result<Vec<Scored>> {
    let mut out = Vec::new();
    for (i, (tr, te)) in train.views.iter().zip(&test.views).enumerate() {
        let ptr = projector.project(i, tr.features())?;
        let pte = projector.project(i, te.features())?;
        let clf = elm_train(&ptr, &tr.labels, train.class_count, elm)?;
        let pred = clf.predict(&pte)?;
        out.push(Scored {
            view: i + 1,
            effective_dim: projector.dim(),
            eval: ViewEval::new(i + 1, &pte, &pred, &te.labels)?,
        });
    }
    Ok(out)
}

/// Runs the protocol and aggregates mean and sample standard deviation of
/// accuracy over repeats. Rows are sorted by method, view and dim.
pub fn run_benchmark(ds: &MultiViewDataset, cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let methods = cfg.resolved_methods(ds)?;
    let mut measurements = Vec::new();
    let mut evaluations = Vec::new();
    let repeat_seeds: Vec<u64> = (0..cfg.repeats).map(|r| cfg.seed + r as u64).collect();

    for (repeat, &seed) in repeat_seeds.iter().enumerate() {
        let (train, test) = split(ds, cfg.train_fraction, seed)?;
        let elm = ElmConfig {
            hidden: cfg.elm_hidden,
            lambda: cfg.elm_lambda,
            seed,
        };
        for &method in &methods {
            let mut record = |dim: usize, scored: Vec<Scored>, started: Instant| {
                for s in &scored {
                    measurements.push(Measurement {
                        method,
                        view: s.view,
                        dim: if method == Method::Raw {
                            train.views[s.view - 1].dim()
                        } else {
                            dim
                        },
                        effective_dim: s.effective_dim,
                        repeat,
                        seed,
                        accuracy: s.eval.accuracy,
                    });
                }
                evaluations.push(EvalReport {
                    method: method.name().to_string(),
                    dim,
                    seed,
                    views: scored.into_iter().map(|s| s.eval).collect(),
                    wall_time_secs: started.elapsed().as_secs_f64(),
                });
            };
            match method {
                Method::Raw => {
                    let started = Instant::now();
                    let mut scored = Vec::new();
                    for (i, (tr, te)) in train.views.iter().zip(&test.views).enumerate() {
                        let clf = elm_train(tr.features(), &tr.labels, ds.class_count, &elm)?;
                        let pred = clf.predict(te.features())?;
                        scored.push(Scored {
                            view: i + 1,
                            effective_dim: tr.dim(),
                            eval: ViewEval::new(i + 1, te.features(), &pred, &te.labels)?,
                        });
                    }
                    record(0, scored, started);
                }
                Method::Mvle => {
                    let max_dim = *cfg.dims.iter().max().expect("dims validated non-empty");
                    let mvle_cfg = MvleConfig {
                        k: cfg.k,
                        dim: max_dim,
                        heat_t: cfg.heat_t,
                    };
                    let (full, artifacts) = fit(&train, &mvle_cfg)?;
                    let mhon_cfg = MhonConfig {
                        seed,
                        ..cfg.mhon.clone()
                    };
                    for &dim in &cfg.dims {
                        let started = Instant::now();
                        let emb = full.truncated(dim);
                        let models = train_all(&train, &emb, &artifacts, &mhon_cfg)?;
                        let mut scored = Vec::new();
                        for (m, te) in models.iter().zip(&test.views) {
                            let i = m.view_id.expect("per-view model");
                            let pred = m.predict(te.features())?;
                            let z = m.embed(te.features())?;
                            scored.push(Scored {
                                view: i + 1,
                                effective_dim: dim,
                                eval: ViewEval::new(i + 1, &z, &pred, &te.labels)?,
                            });
                        }
                        record(dim, scored, started);
                    }
                }
                _ => {
                    for &dim in &cfg.dims {
                        let started = Instant::now();
                        let d = effective_dim(method, &train, dim);
                        if d != dim {
                            log::debug!("{method}: dim {dim} capped to {d}");
                        }
                        let projector = match method {
                            Method::CcaLda => cca_lda_fit(&train, d)?,
                            Method::Pls => pls_fit(&train, d)?.projector,
                            Method::Mvda => mvda_fit(&train, d, None)?,
                            Method::MvdaVc => mvda_fit(&train, d, Some(cfg.vc_lambda))?,
                            Method::Mvle | Method::Raw => unreachable!(),
                        };
                        let scored = score_linear(&projector, &train, &test, &elm)?;
                        record(dim, scored, started);
                    }
                }
            }
        }
    }

    Ok(BenchmarkReport {
        rows: aggregate(&measurements, cfg.repeats),
        measurements,
        evaluations,
        repeat_seeds,
    })
}

fn aggregate(measurements: &[Measurement], repeats: usize) -> Vec<ReportRow> {
    let mut keys: Vec<(Method, usize, usize)> =
        measurements.iter().map(|m| (m.method, m.view, m.dim)).collect();
    keys.sort_by(|a, b| a.0.name().cmp(b.0.name()).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    keys.dedup();
    keys.into_iter()
        .map(|(method, view, dim)| {
            let acc: Vec<f64> = measurements
                .iter()
                .filter(|m| m.method == method && m.view == view && m.dim == dim)
                .map(|m| m.accuracy)
                .collect();
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let std = if acc.len() > 1 {
                (acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            ReportRow {
                method: method.name().to_string(),
                view,
                dim,
                mean_accuracy: mean,
                std_accuracy: std,
                repeats,
            }
        })
        .collect()
}
