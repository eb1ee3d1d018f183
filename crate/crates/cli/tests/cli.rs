use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hoacs_core::trace::TraceLog;
use serde_json::Value;

fn hoacs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoacs"))
        .args(args)
        .env_remove("HOACS_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&hoacs(args))).unwrap()
}

#[test]
fn encode_worked_example() {
    let out = hoacs(&["encode", "--value", "29", "--moduli", "17,19", "--no-shift"]);
    assert_eq!(stdout(&out), "12,10\n");
    let out = hoacs(&["encode", "--value", "-1", "--signed", "--no-shift"]);
    assert_eq!(stdout(&out), "16,18\n");
}

#[test]
fn shifted_encoding_decodes_back() {
    let v = json(&["encode", "--value", "1234", "--moduli", "251,253", "--seed", "5", "--json"]);
    let comps: Vec<String> = v["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.to_string())
        .collect();
    let out = hoacs(&["decode", "--components", &comps.join(","), "--moduli", "251,253"]);
    assert_eq!(stdout(&out).trim(), "1234");
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hoacs"))
            .args(["encode", "--value", "7", "--moduli", "251,253"])
            .env("HOACS_SEED", seed)
            .output()
            .unwrap();
        stdout(&out)
    };
    assert_eq!(run("42"), run("42"));
    let explicit = stdout(&hoacs(&["encode", "--value", "7", "--moduli", "251,253", "--seed", "42"]));
    assert_eq!(run("42"), explicit);
}

#[test]
fn exit_codes() {
    assert_eq!(hoacs(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hoacs(&["encode"]).status.code(), Some(2));
    assert_eq!(hoacs(&["aes", "--key", "00", "--mode", "sideways"]).status.code(), Some(2));
    let bad = hoacs(&["encode", "--value", "3", "--moduli", "6,9"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("coprime"));
    assert_eq!(hoacs(&["encode", "--value", "-3"]).status.code(), Some(1));
    assert_eq!(hoacs(&["aes", "--key", "00"]).status.code(), Some(1));
}

#[test]
fn ops_demo_agrees_with_plain_arithmetic() {
    let v = json(&["ops-demo", "--a", "200", "--b", "77", "--seed", "3", "--json"]);
    let ops = v["ops"].as_array().unwrap();
    assert!(ops.len() >= 12);
    assert!(ops.iter().all(|o| o["ok"] == Value::Bool(true)));
}

#[test]
fn aes_with_audit_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = hoacs(&[
        "aes",
        "--key",
        "2b7eaffccbaed2a6abf7cf8b09cf4fd3",
        "--block",
        "3243f6a8885a308d313198a2e0370734",
        "--mode",
        "protected-grid",
        "--audit",
        out_dir.to_str().unwrap(),
    ]);
    let ct = stdout(&out);
    let baseline = hoacs(&[
        "aes",
        "--key",
        "2b7eaffccbaed2a6abf7cf8b09cf4fd3",
        "--block",
        "3243f6a8885a308d313198a2e0370734",
        "--mode",
        "baseline",
    ]);
    assert_eq!(ct, stdout(&baseline));
    assert_eq!(fs::read_to_string(out_dir.join("ciphertext.txt")).unwrap(), ct);
    let trace = fs::read(out_dir.join("trace.csv")).unwrap();
    let log = TraceLog::read_csv(&trace[..]).unwrap();
    assert!(!log.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mode"], "protected-grid");
    for seg in 1..=2 {
        let hits: u64 = report["segments"][seg]["word_hits"]
            .as_array()
            .unwrap()
            .iter()
            .map(|h| h.as_u64().unwrap())
            .sum();
        assert_eq!(hits, 0);
    }
}

#[test]
fn fips_vector_through_cli() {
    let out = hoacs(&["aes", "--key", "2b7e151628aed2a6abf7158809cf4f3c", "--mode", "protected-tree"]);
    assert_eq!(stdout(&out).trim(), "3925841d02dc09fbdc118597196a0b32");
}

#[test]
fn audit_flags_coincidences() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&["audit", "--modes", "protected-tree", "--out", dir.path().to_str().unwrap(), "--json"]);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    for r in reports {
        assert!(!r["coincidences"].as_array().unwrap().is_empty());
    }
    let files = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 6);
}

#[test]
fn transform_matches_golden() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../ir/tests/corpus");
    let input = corpus.join("mixed_ops.ir");
    let out = hoacs(&["transform", "--in", input.to_str().unwrap(), "--seed", "7"]);
    let golden = fs::read_to_string(corpus.join("mixed_ops.expected.ir")).unwrap();
    assert_eq!(stdout(&out), golden);
}

#[test]
fn transform_with_explicit_moduli() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.ir");
    fs::write(&input, "func @f(%rnc_a: u8, %b: u8) {\n  %c = add u8 %rnc_a, %b\n  ret u8 %c\n}\n").unwrap();
    let output = dir.path().join("g.ir");
    let out = hoacs(&[
        "transform",
        "--in",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
        "--m1",
        "251",
        "--m2",
        "253",
    ]);
    stdout(&out);
    let text = fs::read_to_string(output).unwrap();
    assert!(text.starts_with("; rnc-transform seed=0 moduli=251,253\n"));
    assert_eq!(hoacs(&["transform", "--in", "x.ir", "--m1", "3"]).status.code(), Some(2));
}

#[test]
fn attack_calc_json() {
    let v = json(&["attack-calc", "--json"]);
    let comb = v["combinational_s"].as_f64().unwrap();
    let seq = v["sequential_s"].as_f64().unwrap();
    assert!((comb - 566.94).abs() < 0.01);
    assert_eq!(seq, comb * 5.0);
    assert_eq!(v["reported"]["sequential_min"], 2.89);
    let ops = v["brute_force"]["cost"]["ops"].as_f64().unwrap();
    assert!((ops - 6.97e6).abs() / 6.97e6 < 0.01);
    // annotation only accompanies the default parameters
    let v = json(&["attack-calc", "--bits", "16", "--json"]);
    assert!(v.get("reported").is_none());
    assert_eq!(hoacs(&["attack-calc", "--registers", "0"]).status.code(), Some(1));
}

#[test]
fn bench_writes_reports_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.conf");
    let prefix = dir.path().join("res/run");
    fs::write(
        &cfg,
        format!(
            "ops = add, eq\ncounts = 0, 50\nrepetitions = 2\nseed = 4\noutput = {}\n",
            prefix.display()
        ),
    )
    .unwrap();
    let v = json(&["bench", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(v["seed"], 4);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for r in rows {
        if r["count"] == 0 {
            assert!(r["ratio"].is_null());
            assert!(r["reason"].is_string());
        } else {
            assert!(r["ratio"].as_f64().unwrap() > 0.0);
        }
    }
    let csv = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.starts_with("op,variant,count,mean_plain_ns,mean_rnc_ns,ratio\n"));
    assert_eq!(csv.lines().count(), 13);
    assert!(prefix.with_extension("json").exists());

    // the command line overrides the file
    let v = json(&["bench", "--config", cfg.to_str().unwrap(), "--seed", "9", "--variants", "ir-path", "--json"]);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(hoacs(&["bench", "--repetitions", "0"]).status.code(), Some(1));
}
