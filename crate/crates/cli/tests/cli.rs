use std::path::Path;
use std::process::{Command, Output};

use mvle_core::dataset::{self, read_matrix_csv, LabeledView};
use mvle_core::{Matrix, MultiViewDataset, MvleConfig};

fn mvle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mvle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn load(dir: &Path) -> MultiViewDataset {
    let views = (1..=2)
        .map(|i| {
            let (data, labels) = dataset::load_view_csv(
                &dir.join(format!("view{i}_features.csv")),
                &dir.join(format!("view{i}_labels.csv")),
                i - 1,
            )
            .unwrap();
            LabeledView { data, labels }
        })
        .collect();
    MultiViewDataset::new(views, 4).unwrap()
}

/// Small dataset so the pipeline commands stay quick.
fn small_data(dir: &Path) {
    ok(&["gen", "--out", s(dir), "--samples-per-class", "15", "--seed", "3"]);
}

#[test]
fn gen_default_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["gen", "--out", s(dir.path())]);
    assert!(stdout.contains("views=2"));
    for i in 1..=2 {
        let m = read_matrix_csv(&dir.path().join(format!("view{i}_features.csv"))).unwrap();
        assert_eq!(m.rows(), 240);
        let labels = std::fs::read_to_string(dir.path().join(format!("view{i}_labels.csv"))).unwrap();
        assert_eq!(labels.lines().count(), 240);
    }
}

#[test]
fn gen_same_seed_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&["gen", "--out", s(a.path()), "--seed", "11"]);
    ok(&["gen", "--out", s(b.path()), "--seed", "11"]);
    for name in ["view1_features.csv", "view1_labels.csv", "view2_features.csv", "view2_labels.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 1, "neighbours": 4}"#).unwrap();
    let out = mvle(&["gen", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("neighbours"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: config:"), "{err}");
}

#[test]
fn non_positive_value_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = mvle(&["gen", "--out", s(dir.path()), "--classes", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("classes"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"samples_per_class": 5, "classes": 3}"#).unwrap();
    ok(&["gen", "--config", s(&cfg), "--classes", "2", "--out", s(dir.path())]);
    let m = read_matrix_csv(&dir.path().join("view1_features.csv")).unwrap();
    assert_eq!(m.rows(), 10);
}

#[test]
fn embed_deterministic_and_objective_matches() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let common = ["--data", s(data.path()), "--k", "5", "--dim", "3"];
    let out_a = ok(&[&["embed", "--out", s(a.path())][..], &common].concat());
    ok(&[&["embed", "--out", s(b.path())][..], &common].concat());
    for name in ["embedding_view1.csv", "embedding_view2.csv", "embedding.json"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap()
        );
    }

    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("embedding.json")).unwrap()).unwrap();
    let eig: Vec<f64> = sidecar["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(eig.len(), 3);
    assert!(eig.windows(2).all(|w| w[0] <= w[1]), "{eig:?}");

    let printed: f64 = out_a
        .lines()
        .find_map(|l| l.strip_prefix("xi="))
        .unwrap()
        .parse()
        .unwrap();
    let ds = load(data.path());
    let (_, art) = mvle_core::fit(&ds, &MvleConfig { k: 5, dim: 3, heat_t: None }).unwrap();
    let blocks: Vec<Matrix> = (1..=2)
        .map(|i| read_matrix_csv(&a.path().join(format!("embedding_view{i}.csv"))).unwrap())
        .collect();
    let y = Matrix::vstack(&blocks.iter().collect::<Vec<_>>()).unwrap();
    let xi = mvle_core::objective(&y, &art.graph).unwrap();
    assert!((printed - xi).abs() <= 1e-9 * xi.abs().max(1.0), "{printed} vs {xi}");
    let sum: f64 = eig.iter().sum();
    assert!((printed - 2.0 * sum).abs() < 1e-8);
}

#[test]
fn embed_dump_graph() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let out = tempfile::tempdir().unwrap();
    ok(&["embed", "--data", s(data.path()), "--out", s(out.path()), "--k", "5", "--dump-graph"]);
    let w = read_matrix_csv(&out.path().join("graph_w.csv")).unwrap();
    assert_eq!(w.shape(), (120, 120));
}

#[test]
fn embed_errors_are_module_qualified() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let out = mvle(&["embed", "--data", s(data.path()), "--out", s(data.path()), "--dim", "500"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: mvle:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    let empty = tempfile::tempdir().unwrap();
    let out = mvle(&["embed", "--data", s(empty.path())]);
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: dataset:"));
}

#[test]
fn train_then_eval() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let models = tempfile::tempdir().unwrap();
    let stdout = ok(&["train-mhon", "--data", s(data.path()), "--out", s(models.path()), "--k", "5"]);
    assert!(stdout.contains("model_view1.json"));
    assert!(stdout.contains("model_view2.json"));

    let test = tempfile::tempdir().unwrap();
    ok(&["gen", "--out", s(test.path()), "--samples-per-class", "10", "--seed", "4"]);
    let res = tempfile::tempdir().unwrap();
    ok(&[
        "eval",
        "--data",
        s(test.path()),
        "--model",
        s(models.path()),
        "--out",
        s(res.path()),
    ]);
    let report: mvle_core::EvalReport =
        serde_json::from_str(&std::fs::read_to_string(res.path().join("eval.json")).unwrap()).unwrap();
    assert_eq!(report.views.len(), 2);
    assert_eq!(report.dim, 4);
    for v in &report.views {
        assert!((0.0..=1.0).contains(&v.accuracy));
        assert!(v.s_w.is_some() && v.s_b.is_some());
    }
}

#[test]
fn train_concatenated_then_eval() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let models = tempfile::tempdir().unwrap();
    ok(&["train-mhon", "--data", s(data.path()), "--out", s(models.path()), "--k", "5", "--concatenate"]);
    assert!(models.path().join("model_concat.json").exists());
    ok(&["eval", "--data", s(data.path()), "--out", s(models.path())]);
    let report: mvle_core::EvalReport =
        serde_json::from_str(&std::fs::read_to_string(models.path().join("eval.json")).unwrap()).unwrap();
    assert_eq!(report.views.len(), 1);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn benchmark_raw_matches_direct_elm() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let out = tempfile::tempdir().unwrap();
    ok(&[
        "benchmark",
        "--data",
        s(data.path()),
        "--out",
        s(out.path()),
        "--methods",
        "raw",
        "--repeats",
        "1",
        "--seed",
        "9",
    ]);
    let rows = csv_rows(&out.path().join("report.csv"));
    assert_eq!(rows[0].join(","), "method,view,dim,mean_accuracy,std_accuracy,repeats");
    assert_eq!(rows.len(), 3);

    let ds = load(data.path());
    let (train, test) = dataset::split(&ds, 2.0 / 3.0, 9).unwrap();
    let elm = mvle_core::ElmConfig { hidden: 256, lambda: 1e-2, seed: 9 };
    for (i, row) in rows[1..].iter().enumerate() {
        let clf = mvle_core::baselines::elm_train(
            train.views[i].features(),
            &train.views[i].labels,
            4,
            &elm,
        )
        .unwrap();
        let pred = clf.predict(test.views[i].features()).unwrap();
        let acc = mvle_core::metrics::accuracy(&pred, &test.views[i].labels).unwrap();
        assert_eq!(row[0], "raw");
        assert_eq!(row[3].parse::<f64>().unwrap(), acc);
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn benchmark_repeats_reproducible() {
    let data = tempfile::tempdir().unwrap();
    small_data(data.path());
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        ok(&[
            "benchmark",
            "--data",
            s(data.path()),
            "--out",
            s(dir.path()),
            "--methods",
            "mvle,mvda,raw",
            "--dims",
            "2,4",
            "--k",
            "5",
            "--repeats",
            "5",
        ]);
    }
    assert_eq!(
        std::fs::read(a.path().join("report.csv")).unwrap(),
        std::fs::read(b.path().join("report.csv")).unwrap()
    );
    let report: mvle_core::BenchmarkReport =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.repeat_seeds, vec![0, 1, 2, 3, 4]);
}

#[test]
fn benchmark_unknown_method() {
    let out = mvle(&["benchmark", "--methods", "mvle,tsne", "--repeats", "1"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: benchmark:"), "{err}");
    assert!(err.contains("tsne"), "{err}");
}
