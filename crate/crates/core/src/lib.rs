//! Multi-view Laplacian eigenmaps (MvLE) with an out-of-sample network
//! (MHON), the usual linear multi-view baselines and a benchmark runner.
//!
//! The pipeline in one call:
//!
//! ```
//! use mvle_core::{fit, gen_synthetic, train_all, MhonConfig, MvleConfig, SyntheticSpec};
//!
//! let ds = gen_synthetic(&SyntheticSpec { samples_per_class_per_view: 12, ..Default::default() })?;
//! let (embedding, artifacts) = fit(&ds, &MvleConfig { k: 5, dim: 3, heat_t: None })?;
//! let models = train_all(&ds, &embedding, &artifacts, &MhonConfig::default())?;
//! let labels = models[1].predict(ds.views[1].features())?;
//! assert_eq!(labels.len(), 48);
//! # Ok::<(), mvle_core::Error>(())
//! ```

pub mod baselines;
pub mod benchmark;
pub mod bon;
pub mod dataset;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod mhon;
pub mod mvle;

pub use baselines::{ElmClassifier, ElmConfig, LinearProjector, ProjectorKind};
pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport, Method, ReportRow};
pub use dataset::{
    gen_synthetic, LabelVector, LabeledView, MultiViewDataset, NormStats, SyntheticSpec,
    ViewMatrix,
};
pub use graph::WeightGraph;
pub use linalg::Matrix;
pub use metrics::EvalReport;
pub use mhon::{train_all, Activation, MhonConfig, MhonModel};
pub use mvle::{fit, objective, Embedding, FitArtifacts, MvleConfig};

/// Any error raised by the library, tagged with the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("linalg: {0}")]
    Linalg(#[from] linalg::LinalgError),
    #[error("dataset: {0}")]
    Dataset(#[from] dataset::DatasetError),
    #[error("bon: {0}")]
    Bon(#[from] bon::BonError),
    #[error("graph: {0}")]
    Graph(#[from] graph::GraphError),
    #[error("mvle: {0}")]
    Mvle(#[from] mvle::MvleError),
    #[error("mhon: {0}")]
    Mhon(#[from] mhon::MhonError),
    #[error("baselines: {0}")]
    Baselines(#[from] baselines::BaselineError),
    #[error("metrics: {0}")]
    Metrics(#[from] metrics::MetricsError),
    #[error("benchmark: {0}")]
    Benchmark(#[from] benchmark::BenchmarkError),
}
