use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensorsplit"))
        .arg(args[0])
        .arg("--config")
        .arg(config)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn epsdim_single_coordinate_row() {
    let out = run(&["epsdim"], &configs().join("epsdim_single.json"));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["eps", "d", "n", "j_count", "d0", "truncated"]);
    let row = rows.records().next().unwrap().unwrap();
    assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
    assert_eq!(&row[2], "4");
    assert!(!text.contains('\r'));
}

#[test]
fn not_certified_exit_code() {
    let out = run(&["equiv"], &configs().join("equiv_not_certified.json"));
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "not_certified");
    assert!(report["failing"].as_array().is_some_and(|f| !f.is_empty()));

    let out = run(&["equiv"], &configs().join("equiv.json"));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "certified");
    assert!(report["c"].as_f64().unwrap() >= 1.0);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    for cmd in ["epsdim", "transform", "anova", "anchored", "equiv", "sobol", "truncate", "regress"] {
        let out = run(&[cmd], &empty);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert_eq!(stderr_json(&out)["error"], "config_invalid");
        assert!(out.stdout.is_empty());
    }
    let typo = dir.path().join("typo.json");
    fs::write(&typo, r#"{"gamma": {"kind": "power", "c": 1.0, "p": 4.0}, "anchr": 0.3}"#).unwrap();
    assert_eq!(run(&["equiv"], &typo).status.code(), Some(2));
    assert_eq!(run(&["equiv", "--anchor", "1.5"], &configs().join("equiv.json")).status.code(), Some(2));
    assert_eq!(run(&["anova", "--quad-order", "65"], &configs().join("anova.json")).status.code(), Some(2));
    assert_eq!(run(&["sobol"], &dir.path().join("missing.json")).status.code(), Some(8));
}

#[test]
fn module_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.json");
    fs::write(&cfg, r#"{"a": {"type": "unit"}, "eps": [0.5]}"#).unwrap();
    assert_eq!(run(&["epsdim"], &cfg).status.code(), Some(4));

    let out = run(&["epsdim", "--cap", "3"], &configs().join("epsdim.json"));
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["error"], "enumeration_cap");

    let cfg = dir.path().join("unit.json");
    fs::write(&cfg, r#"{"a": {"type": "unit"}}"#).unwrap();
    let out = run(&["transform"], &cfg);
    assert_eq!(out.status.code(), Some(6));
    let report = stderr_json(&out);
    assert_eq!(report["witness"]["unit_norm_sq"].as_f64(), Some(0.0));
}

#[test]
fn truncation_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("trunc.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(configs().join("epsdim.json")).unwrap()).unwrap();
    v["allow_truncation"] = true.into();
    v["d"] = serde_json::json!([]);
    fs::write(&cfg, v.to_string()).unwrap();
    let out = run(&["epsdim", "--cap", "3"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(&rows[0][5], "false");
    assert!(rows[1..].iter().all(|r| &r[5] == "true" && &r[3] == "3"), "{text}");
}

#[test]
fn out_file_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sobol.csv");
    let out = run(&["sobol", "--out", out_path.to_str().unwrap()], &configs().join("sobol.json"));
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&out_path).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let total: f64 = rdr.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let out = run(&["truncate"], &configs().join("truncate.json"));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for r in rdr.records() {
        let r = r.unwrap();
        assert!(r[3].parse::<f64>().unwrap() <= 1.0, "bound violated: {r:?}");
    }

    let out = run(&["anchored"], &configs().join("anchored.json"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mode"], "anchored");
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);

    let out = run(&["regress"], &configs().join("regress.json"));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_train"], 30);
    assert_eq!(report["n_test"], 10);
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 30);
    assert_eq!(report["holdout_rmse"].as_array().unwrap().len(), 2);
}

#[test]
fn repeated_runs_identical() {
    for (cmd, cfg) in [("epsdim", "epsdim.json"), ("anova", "anova.json"), ("regress", "regress.json")] {
        let a = run(&[cmd], &configs().join(cfg));
        let b = run(&[cmd, "--threads", "1"], &configs().join(cfg));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}
