use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use mvle_core::dataset::{self, LabeledView, SyntheticSpec};
use mvle_core::metrics::{accuracy, ViewEval};
use mvle_core::mhon::concat_views;
use mvle_core::mvle::{write_embedding, EmbeddingSidecar};
use mvle_core::{
    objective, run_benchmark, BenchmarkConfig, EvalReport, Method, MhonConfig, MhonModel,
    MultiViewDataset, MvleConfig,
};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "mvle", version, about = "Multi-view Laplacian embedding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic multi-view dataset.
    Gen(RunConfig),
    /// Fit the embedding on a dataset and export coordinates.
    Embed(RunConfig),
    /// Fit the embedding and train one out-of-sample network per view.
    TrainMhon(RunConfig),
    /// Score trained networks on a dataset.
    Eval(RunConfig),
    /// Repeated split benchmark of every method over a dimension sweep.
    Benchmark(RunConfig),
}

/// Lifts a library error so it prints with its module prefix.
fn core<T, E: Into<mvle_core::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Gen(c) => RunConfig::resolve(c).and_then(|c| cmd_gen(&c)),
        Command::Embed(c) => RunConfig::resolve(c).and_then(|c| cmd_embed(&c)),
        Command::TrainMhon(c) => RunConfig::resolve(c).and_then(|c| cmd_train_mhon(&c)),
        Command::Eval(c) => RunConfig::resolve(c).and_then(|c| cmd_eval(&c)),
        Command::Benchmark(c) => RunConfig::resolve(c).and_then(|c| cmd_benchmark(&c)),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their source text.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            let msg = msg.replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("io: cannot create {}", dir.display()))
}

fn synthetic_spec(cfg: &RunConfig) -> SyntheticSpec {
    let d = SyntheticSpec::default();
    SyntheticSpec {
        class_count: cfg.classes.unwrap_or(d.class_count),
        samples_per_class_per_view: cfg.samples_per_class.unwrap_or(d.samples_per_class_per_view),
        view_dims: cfg.view_dims.clone().unwrap_or(d.view_dims),
        noise_sigma: cfg.noise.unwrap_or(d.noise_sigma),
        nonlinearity: cfg.nonlinearity.unwrap_or(d.nonlinearity),
        seed: cfg.seed.unwrap_or(d.seed),
    }
}

fn features_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view{view}_features.csv"))
}

fn labels_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view{view}_labels.csv"))
}

/// Loads `view1_*`, `view2_*`, ... until the next feature file is missing.
fn load_dataset(dir: &Path, classes: Option<usize>) -> Result<MultiViewDataset> {
    let mut views = Vec::new();
    while features_path(dir, views.len() + 1).exists() {
        let i = views.len() + 1;
        let (data, labels) = core(dataset::load_view_csv(
            &features_path(dir, i),
            &labels_path(dir, i),
            i - 1,
        ))?;
        views.push(LabeledView { data, labels });
    }
    if views.is_empty() {
        bail!("dataset: no view1_features.csv in {}", dir.display());
    }
    let c = classes.unwrap_or_else(|| views.iter().map(|v| v.labels.max_class()).max().unwrap_or(0));
    core(MultiViewDataset::new(views, c))
}

fn data_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.data
        .as_deref()
        .context("config: `data` is required for this command")
}

fn mvle_config(cfg: &RunConfig) -> MvleConfig {
    let d = MvleConfig::default();
    MvleConfig {
        k: cfg.k.unwrap_or(d.k),
        dim: cfg.dim.unwrap_or(d.dim),
        heat_t: cfg.t,
    }
}

fn mhon_config(cfg: &RunConfig) -> MhonConfig {
    let d = MhonConfig::default();
    MhonConfig {
        hidden1: cfg.h1,
        hidden2: cfg.h2.unwrap_or(d.hidden2),
        lambda: cfg.lambda.unwrap_or(d.lambda),
        activation: cfg.activation.unwrap_or(d.activation),
        seed: cfg.seed.unwrap_or(d.seed),
        concatenate_views: cfg.concatenate.unwrap_or(false),
    }
}

fn cmd_gen(cfg: &RunConfig) -> Result<()> {
    let spec = synthetic_spec(cfg);
    let ds = core(dataset::gen_synthetic(&spec))?;
    let out = cfg.out_dir();
    ensure_dir(&out)?;
    for (i, v) in ds.views.iter().enumerate() {
        core(dataset::write_view_csv(
            &features_path(&out, i + 1),
            &labels_path(&out, i + 1),
            &v.data,
            &v.labels,
        ))?;
    }
    println!(
        "views={} classes={} seed={} nonlinearity={:?}",
        ds.view_count(),
        ds.class_count,
        spec.seed,
        spec.nonlinearity
    );
    for (i, v) in ds.views.iter().enumerate() {
        let counts: Vec<String> = dataset::label_summary(&v.labels)
            .iter()
            .map(|(c, n)| format!("{c}:{n}"))
            .collect();
        println!("view{} rows={} dim={} classes=[{}]", i + 1, v.samples(), v.dim(), counts.join(" "));
    }
    Ok(())
}

fn cmd_embed(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(data_dir(cfg)?, cfg.classes)?;
    let mcfg = mvle_config(cfg);
    let (emb, art) = core(mvle_core::fit(&ds, &mcfg))?;
    let xi = core(objective(&emb.y, &art.graph))?;
    let out = cfg.out_dir();
    ensure_dir(&out)?;
    let sidecar = EmbeddingSidecar {
        eigenvalues: emb.eigenvalues.clone(),
        k: mcfg.k,
        t: art.graph.heat_t,
        dim: emb.dim,
        seed: cfg.seed,
        objective: xi,
        view_rows: ds.views.iter().map(|v| v.samples()).collect(),
        zero_multiplicity: art.zero_multiplicity,
    };
    core(write_embedding(&out, &emb, &sidecar))?;
    if cfg.dump_graph.unwrap_or(false) {
        core(dataset::write_matrix_csv(&out.join("graph_w.csv"), &art.graph.w))?;
    }
    println!("eigenvalues={:?}", emb.eigenvalues);
    println!("xi={xi}");
    Ok(())
}

fn cmd_train_mhon(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(data_dir(cfg)?, cfg.classes)?;
    let (emb, art) = core(mvle_core::fit(&ds, &mvle_config(cfg)))?;
    let hcfg = mhon_config(cfg);
    let models = core(mvle_core::train_all(&ds, &emb, &art, &hcfg))?;
    let out = cfg.out_dir();
    ensure_dir(&out)?;
    for m in &models {
        let (name, x, labels) = match m.view_id {
            Some(v) => (
                format!("model_view{}.json", v + 1),
                ds.views[v].features().clone(),
                &ds.views[v].labels,
            ),
            None => (
                "model_concat.json".to_string(),
                core(concat_views(&ds.views.iter().map(|v| v.features()).collect::<Vec<_>>()))?,
                &ds.views[0].labels,
            ),
        };
        core(m.save(&out.join(&name)))?;
        let acc = core(accuracy(&core(m.predict(&x))?, labels))?;
        println!("{name} train_accuracy={acc}");
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let ds = load_dataset(data_dir(cfg)?, cfg.classes)?;
    let out = cfg.out_dir();
    let model_dir = cfg.model.clone().unwrap_or_else(|| out.clone());
    let concat = model_dir.join("model_concat.json");
    let mut views = Vec::new();
    let mut dim = 0;
    if !model_dir.join("model_view1.json").exists() && concat.exists() {
        let m = core(MhonModel::load(&concat))?;
        let x = core(concat_views(&ds.views.iter().map(|v| v.features()).collect::<Vec<_>>()))?;
        dim = m.dim();
        let pred = core(m.predict(&x))?;
        views.push(core(ViewEval::new(0, &core(m.embed(&x))?, &pred, &ds.views[0].labels))?);
    } else {
        for (i, v) in ds.views.iter().enumerate() {
            let m = core(MhonModel::load(&model_dir.join(format!("model_view{}.json", i + 1))))?;
            dim = m.dim();
            let pred = core(m.predict(v.features()))?;
            views.push(core(ViewEval::new(i + 1, &core(m.embed(v.features()))?, &pred, &v.labels))?);
        }
    }
    let report = EvalReport {
        method: Method::Mvle.name().to_string(),
        dim,
        seed: cfg.seed.unwrap_or(0),
        views,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    for v in &report.views {
        println!("view{} accuracy={}", v.view, v.accuracy);
    }
    ensure_dir(&out)?;
    let path = out.join("eval.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("io: cannot write {}", path.display()))?;
    Ok(())
}

fn cmd_benchmark(cfg: &RunConfig) -> Result<()> {
    let ds = match &cfg.data {
        Some(dir) => load_dataset(dir, cfg.classes)?,
        None => core(dataset::gen_synthetic(&synthetic_spec(cfg)))?,
    };
    let d = BenchmarkConfig::default();
    let methods = match &cfg.methods {
        Some(names) => Some(
            names
                .iter()
                .map(|s| core(s.parse::<Method>()))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let bcfg = BenchmarkConfig {
        k: cfg.k.unwrap_or(d.k),
        heat_t: cfg.t,
        dims: cfg.dims.clone().unwrap_or(d.dims),
        train_fraction: cfg.train_fraction.unwrap_or(d.train_fraction),
        repeats: cfg.repeats.unwrap_or(d.repeats),
        seed: cfg.seed.unwrap_or(d.seed),
        methods,
        mhon: mhon_config(cfg),
        elm_hidden: cfg.elm_hidden.unwrap_or(d.elm_hidden),
        elm_lambda: cfg.elm_lambda.unwrap_or(d.elm_lambda),
        vc_lambda: cfg.vc_lambda.unwrap_or(d.vc_lambda),
    };
    info!("benchmark over {} views, dims {:?}", ds.view_count(), bcfg.dims);
    let report = core(run_benchmark(&ds, &bcfg))?;
    let out = cfg.out_dir();
    ensure_dir(&out)?;
    core(report.write_csv(&out.join("report.csv")))?;
    let path = out.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("io: cannot write {}", path.display()))?;
    println!("method,view,dim,mean_accuracy,std_accuracy,repeats");
    for r in &report.rows {
        println!(
            "{},{},{},{:.4},{:.4},{}",
            r.method, r.view, r.dim, r.mean_accuracy, r.std_accuracy, r.repeats
        );
    }
    Ok(())
}
