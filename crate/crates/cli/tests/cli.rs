use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn traitlex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_traitlex"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = traitlex(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, p: &str) -> String {
    fs::read_to_string(dir.join(p)).unwrap()
}

fn pdf_pipeline(dir: &Path) {
    ok(dir, &["synth", "--seed", "4", "--samples", "500", "--out-dir", "syn"]);
    ok(dir, &["pdf-build", "--corpus", "syn/corpus", "--min-word-freq", "50", "--out", "model.json"]);
    ok(dir, &["pdf-eval", "--model", "model.json", "--corpus", "syn/corpus", "--out-dir", "eval"]);
}

#[test]
fn version_names_formats() {
    let d = tempfile::tempdir().unwrap();
    let out = traitlex(d.path(), &["--version"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("pdf model v1") && s.contains("store v1"), "{s}");
}

#[test]
fn usage_errors_exit_one_with_one_line() {
    let d = tempfile::tempdir().unwrap();
    for args in [&["pdf-build", "--bogus"][..], &["no-such-command"], &["pdf-eval"]] {
        let out = traitlex(d.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    let out = traitlex(d.path(), &["ml-train", "--data", "x.csv", "--algorithm", "svm_rbf", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_and_name_the_input() {
    let d = tempfile::tempdir().unwrap();
    let out = traitlex(d.path(), &["distribution", "--corpus", "missing_store", "--out", "d.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("missing_store"), "{err}");

    fs::write(d.path().join("bad.csv"), "a,b,label\n1,2,0\n1,x,1\n").unwrap();
    let out = traitlex(d.path(), &["ml-train", "--data", "bad.csv", "--algorithm", "knn", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.csv line 3"), "{err}");
    assert!(!d.path().join("m.json").exists());
}

#[test]
fn pdf_eval_reports_metrics_and_curve() {
    let d = tempfile::tempdir().unwrap();
    pdf_pipeline(d.path());
    let report = read(d.path(), "eval/report.csv");
    let metrics: Vec<(&str, f64)> = report
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k, v.parse().unwrap())
        })
        .collect();
    let get = |k: &str| metrics.iter().find(|m| m.0 == k).unwrap().1;
    assert!(get("marginal_accuracy") >= 0.9);
    assert!(get("mae") <= 0.05);
    assert!(get("rmse") >= get("mae"));
    assert!(read(d.path(), "eval/curve.csv").starts_with("threshold,mae,n\n0,"));
    let manifest: serde_json::Value = serde_json::from_str(&read(d.path(), "eval/run.json")).unwrap();
    assert_eq!(manifest["config"]["margin"], 0.1);
    assert_eq!(manifest["subcommand"], "pdf-eval");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pdf_pipeline(a.path());
    pdf_pipeline(b.path());
    for f in [
        "syn/corpus/samples.jsonl",
        "syn/truth.csv",
        "model.json",
        "model.json.run.json",
        "eval/report.csv",
        "eval/curve.csv",
        "eval/predictions.csv",
        "eval/run.json",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn distribution_writes_deciles() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--samples", "200", "--out-dir", "syn"]);
    ok(d.path(), &["distribution", "--corpus", "syn/corpus", "--trait", "N", "--out", "dist.csv"]);
    let csv = read(d.path(), "dist.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "bin_lo,bin_hi,percent");
    assert_eq!(rows.len(), 11);
    let total: f64 = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 100.0).abs() < 1e-2);
}

#[test]
fn ml_train_and_eval_on_csv() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("f0,f1,label\n");
    for i in 0..40 {
        let c = i % 2;
        csv.push_str(&format!("{},{},{c}\n", c as f64 * 3.0 + (i % 5) as f64 * 0.1, (i % 7) as f64));
    }
    fs::write(d.path().join("train.csv"), &csv).unwrap();
    ok(d.path(), &["ml-train", "--data", "train.csv", "--algorithm", "decision_tree", "--k", "4", "--out", "tree.json"]);
    assert!(read(d.path(), "tree.json.cv.csv").contains("mean,1.000000"));
    ok(d.path(), &["ml-eval", "--model", "tree.json", "--data", "train.csv", "--out-dir", "ev"]);
    assert!(read(d.path(), "ev/report.csv").contains("accuracy,1\n"));
    assert_eq!(read(d.path(), "ev/confusion.csv").lines().count(), 3);
}

fn trained_bank(dir: &Path) {
    ok(dir, &["synth", "--samples", "0", "--respondents", "150", "--out-dir", "syn"]);
    fs::write(dir.join("hp.json"), r#"{"random_forest_clf": {"n_trees": 60}}"#).unwrap();
    ok(
        dir,
        &[
            "cs-train", "--survey", "syn/survey.csv", "--catalog", "syn/catalog.json", "--algorithms",
            "random_forest_clf", "--k", "5", "--hyperparams", "hp.json", "--out-dir", "cs",
        ],
    );
}

#[test]
fn cs_predict_from_file_and_prompt() {
    let d = tempfile::tempdir().unwrap();
    trained_bank(d.path());
    let mut likert = vec!["2"; 50];
    likert[6] = "5";
    fs::write(d.path().join("answers.txt"), likert.join(" ")).unwrap();
    ok(d.path(), &["cs-predict", "--model", "cs/bank.json", "--answers-file", "answers.txt", "--out", "pred.csv"]);
    let pred = read(d.path(), "pred.csv");
    assert_eq!(pred.lines().count(), 6);
    assert!(pred.starts_with("qid,algorithm,label\n"));

    let mut child = Command::new(env!("CARGO_BIN_EXE_traitlex"))
        .args(["cs-predict", "--model", "cs/bank.json"])
        .current_dir(d.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // one invalid entry is re-prompted
    let input = format!("9\n{}\n", likert.join("\n"));
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), pred);

    fs::write(d.path().join("short.txt"), "1 2 3").unwrap();
    let out = traitlex(d.path(), &["cs-predict", "--model", "cs/bank.json", "--answers-file", "short.txt"]);
    assert_eq!(out.status.code(), Some(2));
}
