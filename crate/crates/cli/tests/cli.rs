use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hopfinf(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopfinf"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let focus = hopfinf(dir.path(), &["audit", "--family", "focus", "--theorem", "dissipative-family", "--mu", "0.5"]);
    assert_eq!(focus.status.code(), Some(2), "focus at mu > 0 violates the sign hypothesis");
    let neg = hopfinf(dir.path(), &["audit", "--family", "rotinv", "--theorem", "dissipative-family", "--mu", "0.1"]);
    assert_eq!(neg.status.code(), Some(2));
    let err = hopfinf(dir.path(), &["index", "--family", "nosuch"]);
    assert_eq!(err.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&err.stderr).contains("nosuch"));
    let pass = hopfinf(dir.path(), &["index", "--family", "rot", "--mu", "0.1"]);
    assert_eq!(pass.status.code(), Some(0));
}

#[test]
fn sweep_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfinf(dir.path(), &["sweep", "--family", "rot", "--mu", "-0.2:0.2:5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("sweep.json"));
    assert_eq!(rep["verdict"]["kind"], "HopfAtInfinityDetected");
    assert_eq!(rep["mu_star"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("mu,index_sign,stability"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn classify_finds_the_inv_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfinf(
        dir.path(),
        &["classify", "--family", "inv", "--mu", "0.04", "--z0", "6,0", "--direction", "backward"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&dir.path().join("classify.json"));
    let v = &rep["verdict"];
    assert_eq!(v["kind"], "Periodic", "{rep}");
    assert!((v["mean_radius"].as_f64().unwrap() - 5.0).abs() < 0.05);
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn printed_config_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let first = hopfinf(dir.path(), &["--seed", "11", "--print-config"]);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("stability.seed=11\n"));
    let cfg = dir.path().join("controls.cfg");
    std::fs::write(&cfg, &text).unwrap();
    let second = hopfinf(dir.path(), &["--config", cfg.to_str().unwrap(), "--print-config"]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);

    std::fs::write(&cfg, "index.cout=3\n").unwrap();
    let bad = hopfinf(dir.path(), &["--config", cfg.to_str().unwrap(), "--print-config"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn inline_and_file_fields_agree_with_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inv.field");
    std::fs::write(&file, "name = inv\nsigma = 1\nf = -y - x/r2\ng = x - y/r2\n").unwrap();
    let mut reports = vec![];
    for (k, src) in ["inv", file.to_str().unwrap(), "f = -y - x/r2; g = x - y/r2"].iter().enumerate() {
        let sub = dir.path().join(k.to_string());
        let out = hopfinf(&sub, &["index", "--family", src, "--mu", "0"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let mut rep = json(&sub.join("index.json"));
        rep.as_object_mut().unwrap().remove("field");
        reports.push(rep);
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    assert_eq!(reports[0]["classification"]["class"], "Finite");
}

#[test]
fn portrait_is_an_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopfinf(dir.path(), &["portrait", "--family", "rot", "--mu", "0.1", "--window", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("portrait.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
