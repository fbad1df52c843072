//! Run configuration: a flat JSON document whose keys double as long flags.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use mvle_core::dataset::Nonlinearity;
use mvle_core::Activation;
use serde::{Deserialize, Serialize};

/// Every key may come from `--config <file>` or from its flag; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Flat JSON config file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Directory holding view{i}_features.csv / view{i}_labels.csv.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Directory with model_view{i}.json files (eval); defaults to `out`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_class: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub view_dims: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// `linear` or `swissroll-like`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<Nonlinearity>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Neighbors per sample.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Heat parameter; defaults to the class count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Benchmark dimension sweep, e.g. `2,4,8,16`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    /// One MHON over the concatenated views instead of one per view.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concatenate: Option<bool>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    /// Subset of mvle,cca-lda,pls,mvda,mvda-vc,raw.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elm_hidden: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elm_lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vc_lambda: Option<f64>,

    /// Also write the global weight matrix as graph_w.csv (embed).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_graph: Option<bool>,
}

impl RunConfig {
    /// Overlays the flags onto the config file (if any) and validates.
    pub fn resolve(flags: RunConfig) -> Result<RunConfig> {
        let mut doc = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("config: cannot read {}", path.display()))?;
                match serde_json::from_str(&text) {
                    Ok(serde_json::Value::Object(map)) => map,
                    Ok(_) => bail!("config: {} is not a JSON object", path.display()),
                    Err(e) => bail!("config: {}: {e}", path.display()),
                }
            }
            None => serde_json::Map::new(),
        };
        if let serde_json::Value::Object(over) = serde_json::to_value(&flags)? {
            doc.extend(over);
        }
        let mut cfg: RunConfig = serde_json::from_value(serde_json::Value::Object(doc))
            .map_err(|e| anyhow::anyhow!("config: {e}"))?;
        cfg.config = flags.config;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            ("classes", self.classes),
            ("samples_per_class", self.samples_per_class),
            ("k", self.k),
            ("dim", self.dim),
            ("h1", self.h1),
            ("h2", self.h2),
            ("repeats", self.repeats),
            ("elm_hidden", self.elm_hidden),
        ];
        for (key, v) in counts {
            if v == Some(0) {
                bail!("config: {key} must be positive");
            }
        }
        for (key, list) in [("view_dims", &self.view_dims), ("dims", &self.dims)] {
            if let Some(list) = list {
                if list.is_empty() || list.contains(&0) {
                    bail!("config: {key} must be a non-empty list of positive integers");
                }
            }
        }
        let reals = [
            ("t", self.t),
            ("lambda", self.lambda),
            ("elm_lambda", self.elm_lambda),
        ];
        for (key, v) in reals {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("config: {key} must be positive, got {v}");
                }
            }
        }
        for (key, v) in [("noise", self.noise), ("vc_lambda", self.vc_lambda)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    bail!("config: {key} must be non-negative, got {v}");
                }
            }
        }
        if let Some(f) = self.train_fraction {
            if !(f > 0.0 && f < 1.0) {
                bail!("config: train_fraction must lie in (0, 1), got {f}");
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}
