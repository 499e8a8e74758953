use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SUBCOMMANDS: [&str; 7] = ["count", "decompose", "codebook", "tower", "reduce", "recode", "oracle"];

fn fingen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fingen")).args(args).output().expect("binary runs")
}

fn bundled(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn identical_runs_are_byte_identical() {
    for cmd in SUBCOMMANDS {
        for format in ["json", "csv"] {
            let a = fingen(&[cmd, "--seed", "7", "--format", format]);
            let b = fingen(&[cmd, "--seed", "7", "--format", format]);
            assert_eq!(a.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
            assert!(!a.stdout.is_empty());
            assert_eq!(a.stdout, b.stdout, "{cmd} {format}");
        }
    }
}

#[test]
fn random_instances_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "d.json", r#"{"random": 4}"#);
    let cfg = cfg.to_str().unwrap();
    let run = |seed: &str| fingen(&["decompose", "--config", cfg, "--seed", seed]).stdout;
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}

#[test]
fn reports_carry_the_schema() {
    let out = fingen(&["count"]);
    let v = json_report(&out);
    assert_eq!(v["schema"], "1");
    assert_eq!(v["command"], "count");
    assert_eq!(v["ok"], true);
    let csv = fingen(&["count", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(&csv.stdout[..]);
    assert_eq!(&rdr.headers().unwrap()[0], "schema");
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| &r[0] == "1" && &r[r.len() - 1] == "true"));
}

#[test]
fn csv_fields_with_commas_are_quoted() {
    let out = fingen(&["oracle", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"[[0],[1,2,3]]\""), "{text}");
}

#[test]
fn point_mass_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"q": ["1"], "n_from": 5, "n_to": 5}"#);
    let v = json_report(&fingen(&["count", "--config", cfg.to_str().unwrap()]));
    let rows = v["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["window"]["count"], "1");
}

#[test]
fn oracle_on_rotation_of_four() {
    let v = json_report(&fingen(&["oracle"]));
    let h = v["report"]["result"]["min_entropy"].as_f64().unwrap();
    assert!((h - (2.0 * 2f64.ln() - 0.75 * 3f64.ln())).abs() < 1e-9);
}

#[test]
fn bundled_recode_demo_decodes_exactly() {
    let out = fingen(&["recode", "--config", &bundled("recode_demo.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_report(&out);
    let cert = &v["report"]["certificate"];
    assert_eq!(cert["decode_exact"], true);
    assert_eq!(cert["masses_exact"], true);
    assert_eq!(cert["cell_counts"], serde_json::json!([100, 100]));
    assert_eq!(v["report"]["fault_injection"]["raised"], true);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = fingen(&["oracle", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), fingen(&["oracle"]).stdout);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("count", r#"{"q": ["1/2", "x"]}"#),
        ("count", r#"{"q": ["1/2", "1/3"]}"#),
        ("recode", r#"{"q": [[0], [0, 1]]}"#),
        ("recode", r#"{"unknown": 1}"#),
        ("tower", r#"{"labelings": [[0, 1]]}"#),
        ("oracle", "not json"),
    ];
    for (i, (cmd, body)) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("{i}.json"), body);
        let out = fingen(&[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd} {body}");
        assert!(out.stdout.is_empty());
    }
    assert_eq!(fingen(&["recode", "--max-points", "100"]).status.code(), Some(2));
    assert_eq!(fingen(&["count", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(fingen(&["count", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(fingen(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn tower_height_constraint_is_named() {
    let out = fingen(&["tower", "--config", &bundled("tower_bad_height.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4/eps"), "{err}");
}

#[test]
fn failed_windows_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"eps": 0, "delta": 0.01, "n_from": 1, "n_to": 5}"#);
    let out = fingen(&["count", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_report(&out)["ok"], false);
}

#[test]
fn bundled_configs_run() {
    for (cmd, file) in [
        ("count", "count_sweep.json"),
        ("recode", "recode_partial.json"),
        ("reduce", "reduce_random.json"),
        ("oracle", "oracle_factor.json"),
    ] {
        let out = fingen(&[cmd, "--config", &bundled(file)]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
