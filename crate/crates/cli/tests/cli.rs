use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcrrr::baselines::fit_method;
use pcrrr::{predict, DataPair, GroupPartition, Hyperparameters, SolverConfig};
use pcrrr_cli::artifact::ModelArtifact;
use pcrrr_cli::commands::predict_table;
use pcrrr_cli::io::{read_groups, read_table};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn pcrrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcrrr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fit_example(dir: &Path, extra: &[&str]) -> PathBuf {
    let model = dir.join("model.json");
    let (x, y, g) = (data("x.csv"), data("y.csv"), data("groups.csv"));
    let mut args = vec!["fit", "--x", s(&x), "--y", s(&y), "--groups", s(&g), "--out", s(&model)];
    args.extend_from_slice(extra);
    let out = pcrrr(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    model
}

#[test]
fn saved_model_predicts_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let model = fit_example(dir.path(), &["--lambda", "2", "--theta", "0.05", "--rank", "2"]);
    let preds = dir.path().join("pred.csv");
    let out = pcrrr(&["predict", "--model", s(&model), "--x", s(&data("x.csv")), "--out", s(&preds)]);
    assert!(out.status.success(), "{}", stderr(&out));

    // in-process fit with the same settings
    let x = read_table(&data("x.csv")).unwrap();
    let y = read_table(&data("y.csv")).unwrap();
    let (groups, labels) = read_groups(&data("groups.csv"), &x.names).unwrap();
    assert_eq!(labels, vec!["g1", "g2"]);
    let train = DataPair::new(x.values.clone(), y.values.clone()).unwrap().center_columns();
    let hp = Hyperparameters::new(2.0, 0.05, 2);
    let report = fit_method(pcrrr::Method::Proposed, &train, &groups, &hp, &SolverConfig::default()).unwrap();
    let direct = predict(&x.values, &report.factors, train.centering()).unwrap();

    let artifact = ModelArtifact::load(&model).unwrap();
    assert_eq!(artifact.factors().unwrap(), report.factors);
    assert_eq!(predict_table(&artifact, &x).unwrap(), direct);
    let written = read_table(&preds).unwrap();
    assert_eq!(written.names, vec!["y1", "y2"]);
    assert_eq!(written.values, direct);

    // save → load → save is byte-stable
    let again = dir.path().join("again.json");
    artifact.save(&again).unwrap();
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn fit_without_lambda_cross_validates() {
    let dir = tempfile::tempdir().unwrap();
    let model = fit_example(dir.path(), &["--lambda-grid-size", "5", "--theta", "0,0.01", "--folds", "4"]);
    let artifact = ModelArtifact::load(&model).unwrap();
    assert_eq!(artifact.version, 1);
    assert_eq!(artifact.groups.num_groups(), 2);
}

#[test]
fn every_method_fits_the_example() {
    for method in ["proposed", "mlasso", "melastic", "srrr", "errr"] {
        let dir = tempfile::tempdir().unwrap();
        let model = fit_example(dir.path(), &["--method", method, "--lambda", "1", "--alpha", "0.5"]);
        let artifact = ModelArtifact::load(&model).unwrap();
        assert_eq!(artifact.method.to_string().to_lowercase(), method);
    }
}

#[test]
fn zero_model_predicts_response_means() {
    let dir = tempfile::tempdir().unwrap();
    let model = fit_example(dir.path(), &["--lambda", "1e9"]);
    let artifact = ModelArtifact::load(&model).unwrap();
    assert!(artifact.active_rows.is_empty());
    let x = read_table(&data("x.csv")).unwrap();
    let y = read_table(&data("y.csv")).unwrap();
    let preds = predict_table(&artifact, &x).unwrap();
    for j in 0..2 {
        let mean = y.values.column(j).mean();
        assert!(preds.column(j).iter().all(|v| (v - mean).abs() < 1e-12));
    }
}

#[test]
fn malformed_cell_names_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let mut text = std::fs::read_to_string(data("x.csv")).unwrap();
    text = text.replacen("0.9159", "abc", 1);
    std::fs::write(&bad, text).unwrap();
    let out = pcrrr(&["fit", "--x", s(&bad), "--y", s(&data("y.csv")), "--lambda", "1", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("line 2") && msg.contains("column 2 (x2)"), "{msg}");
}

#[test]
fn short_group_file_is_a_partition_error() {
    let dir = tempfile::tempdir().unwrap();
    let groups = dir.path().join("groups.csv");
    std::fs::write(&groups, "predictor,group\nx1,a\nx2,a\nx3,a\nx4,b\nx5,b\n").unwrap();
    let out = pcrrr(&["fit", "--x", s(&data("x.csv")), "--y", s(&data("y.csv")), "--groups", s(&groups), "--lambda", "1", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("invalid group partition") && msg.contains("x6"), "{msg}");
}

#[test]
fn tab_separated_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("x.tsv");
    std::fs::write(&tsv, std::fs::read_to_string(data("x.csv")).unwrap().replace(',', "\t")).unwrap();
    assert_eq!(read_table(&tsv).unwrap(), read_table(&data("x.csv")).unwrap());
}

#[test]
fn predict_rejects_wrong_columns() {
    let dir = tempfile::tempdir().unwrap();
    let model = fit_example(dir.path(), &["--lambda", "1"]);
    let out = pcrrr(&["predict", "--model", s(&model), "--x", s(&data("y.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, "{\"format\":\"pcrrr-model\",\"version\":7}").unwrap();
    let out = pcrrr(&["predict", "--model", s(&corrupt), "--x", s(&data("x.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("unsupported version 7"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let (x, y) = (data("x.csv"), data("y.csv"));
    let out = pcrrr(&["fit", "--x", s(&x), "--y", s(&y), "--method", "ridge", "--out", s(&m)]);
    assert_eq!(out.status.code(), Some(2));
    let out = pcrrr(&["fit", "--x", s(&x), "--y", s(&y), "--lambda", "1", "--rank", "3", "--out", s(&m)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = pcrrr(&["fit", "--x", s(&x), "--y", s(&y), "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pcrrr(&["--jobs", "0", "predict", "--model", s(&m), "--x", s(&x)]);
    assert_eq!(out.status.code(), Some(2));
    let out = pcrrr(&["simulate", "--scenario", "nope", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cv_writes_the_full_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cv.csv");
    let out = pcrrr(&[
        "cv", "--x", s(&data("x.csv")), "--y", s(&data("y.csv")), "--groups", s(&data("groups.csv")),
        "--lambda", "4,2,1", "--theta", "0,0.1", "--rank", "1,2", "--folds", "4", "--out", s(&table),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,theta,alpha,rank,mean_error,se,fold1,fold2,fold3,fold4,chosen");
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 1);
    assert!(stderr(&out).contains("chosen: lambda="));
}

#[test]
fn simulate_counts_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let out_dir = dir.path().join(name);
        let out = pcrrr(&[
            "--jobs", jobs, "simulate", "--scenario", "ungrouped-p200-n100-tau0.1", "--replications", "2",
            "--method", "proposed,srrr", "--lambda-grid-size", "4", "--theta", "0,0.01", "--folds", "3",
            "--seed", "5", "--out", s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        out_dir
    };
    let a = run("a", "1");
    let b = run("b", "2");
    for file in ["records.csv", "summary.csv", "summary.txt"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let records = std::fs::read_to_string(a.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 4);
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("ungrouped-p200-n100-tau0.1,Proposed,2,"));
    assert!(rows[1].starts_with("ungrouped-p200-n100-tau0.1,SRRR,2,"));
}

#[test]
fn single_group_default_matches_explicit_partition() {
    let x = read_table(&data("x.csv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let groups = dir.path().join("one.csv");
    let body: String = x.names.iter().map(|n| format!("{n},all\n")).collect();
    std::fs::write(&groups, format!("predictor,group\n{body}")).unwrap();
    let (partition, _) = read_groups(&groups, &x.names).unwrap();
    assert_eq!(partition, GroupPartition::single(6));
}
