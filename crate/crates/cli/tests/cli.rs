use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn pacr(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pacr")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn sample_complexity_values() {
    let (code, out, _) = pacr(&[
        "sample-complexity",
        "--lemma",
        "-P",
        "100000",
        "-e",
        "0.1",
        "-d",
        "0.01",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("m = 162\n"));
    let (_, out, _) = pacr(&[
        "sample-complexity",
        "--bottom-up",
        "-P",
        "100",
        "-k",
        "5",
        "-e",
        "0.2",
        "-d",
        "0.05",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["m"], 461);
    assert_eq!(v["epsilon_hat"], 0.02);
    assert_eq!(v["delta_hat"], 0.01);
    let (_, out, _) = pacr(&[
        "sample-complexity",
        "--lemma",
        "-P",
        "1",
        "-e",
        "1",
        "-d",
        "0.367879441",
    ]);
    assert!(out.starts_with("m = 1\n"));
    let (_, out, _) = pacr(&[
        "sample-complexity",
        "--top-down",
        "-P",
        "100",
        "-k",
        "5",
        "-e",
        "0.2",
        "-d",
        "0.05",
    ]);
    assert!(out.starts_with("m = 231\n"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pacr(&["sample-complexity", "-P", "10", "-e", "0.1", "-d", "0.1"]).0, 1);
    assert_eq!(
        pacr(&["sample-complexity", "--lemma", "-P", "10", "-e", "0.1", "-d", "1.5"]).0,
        1
    );
    assert_eq!(pacr(&["no-such-command"]).0, 1);
    assert_eq!(pacr(&["--help"]).0, 0);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"task\": \"merge_sort\", \"epsilon\": ").unwrap();
    let (code, _, err) = pacr(&["run", &path(&cfg), "-o", &path(&dir.path().join("o"))]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
    let (code, _, _) = pacr(&["run", &path(&dir.path().join("missing.json"))]);
    assert_eq!(code, 1);
}

#[test]
fn run_artifacts_embed_provenance_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, _, _) = pacr(&[
        "run",
        &config("sum_list_topdown.json"),
        "-o",
        &path(&out),
        "--seed",
        "99",
    ]);
    assert_eq!(code, 0);
    for f in ["certificate.json", "outcome.json"] {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(f)).unwrap()).unwrap();
        assert_eq!(v["provenance"]["seed"], 99, "{f}");
        assert_eq!(v["provenance"]["config"]["task"], "sum_list");
        assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    }
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["certificate"]["k"], 1);
    assert_eq!(cert["certificate"]["seed"], 99);
    let events = fs::read_to_string(out.join("events.jsonl")).unwrap();
    assert!(events.lines().next().unwrap().contains("\"provenance\""));
    assert!(events
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    let program = fs::read_to_string(out.join("program.pacl")).unwrap();
    assert!(program.starts_with("# pacr "));
    assert!(program.contains("# seed: 99"));
}

#[test]
fn bottom_up_run_writes_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, stdout, _) = pacr(&[
        "run",
        &config("arith_pipeline_bottomup.json"),
        "-o",
        &path(&out),
        "--heldout",
        "500",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("graph.json")).unwrap()).unwrap();
    assert_eq!(g["vertices"].as_array().unwrap().len(), 3);
    assert_eq!(g["evs"].as_array().unwrap().len(), 3);
    assert!(g["provenance"].is_object());
}

#[test]
fn i_dont_know_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = pacr(&[
        "run",
        &config("merge_sort_topdown.json"),
        "-o",
        &path(dir.path()),
        "--k-max",
        "1",
    ]);
    assert_eq!(code, 2);
    assert!(out.starts_with("I don't know"));
}

#[test]
fn validate_bounds_reports_and_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, stdout, _) = pacr(&["validate-bounds", &config("decay.json"), "-o", &path(&out)]);
    assert_eq!(code, 0, "{stdout}");
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,empirical,exact,approx,tolerance,within");
    let k10 = rows.iter().find(|r| r.starts_with("10,")).unwrap();
    assert!(k10.contains(",0.348678,") && k10.ends_with(",true"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("decay.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    let (code, _, err) = pacr(&[
        "validate-bounds",
        &config("lemma1.json"),
        "-o",
        &path(&out),
        "--trials",
        "0",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("trials"));
}

#[test]
fn lemma2_summary_records_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, _, _) = pacr(&[
        "validate-bounds",
        &config("lemma2.json"),
        "-o",
        &path(&out),
        "--trials",
        "200",
    ]);
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("lemma2.json")).unwrap()).unwrap();
    assert_eq!(summary["vacuous_control_survived"], true);
    assert_eq!(summary["trial_count"], 200);
    assert!(summary.get("trials").is_none());
}

#[test]
fn chain_decay_table() {
    let (code, out, _) = pacr(&["chain-decay", "-e", "0.1", "-k", "10", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v[0]["exact"].as_f64().unwrap() - 0.9f64.powi(10)).abs() < 1e-12);
    assert!((v[0]["approx"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-12);
    let (code, _, _) = pacr(&["chain-decay", "-e", "0.1", "--trials", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn eval_program_file() {
    let dir = tempfile::tempdir().unwrap();
    let file: PathBuf = dir.path().join("p.pacl");
    fs::write(&file, "# a pipeline\nfn inc(x) = x + 1\nfn f(x) = 2 * inc(x)\n").unwrap();
    let (code, out, _) = pacr(&["eval", &path(&file), "f", "3"]);
    assert_eq!((code, out.as_str()), (0, "8\n"));
    let (_, out, _) = pacr(&["eval", &path(&file), "inc", "-4"]);
    assert_eq!(out, "-3\n");
    let (code, _, err) = pacr(&["eval", &path(&file), "f", "[1]"]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
    fs::write(&file, "fn f(x) = y").unwrap();
    assert_eq!(pacr(&["eval", &path(&file), "f", "1"]).0, 1);
}

#[test]
fn shipped_configs_match_schema_fields() {
    let schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json")).unwrap(),
    )
    .unwrap();
    let known = schema["properties"].as_object().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(known.contains_key(key), "{key}");
        }
        pacr_core::harness::config::ExperimentConfig::from_json(&text).unwrap();
        seen += 1;
    }
    assert_eq!(seen, 8);
}
