use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const MODEL: &str = r#"{"epsilons": [0.1, 0.65, 1.3, 2.2], "g": 0.8}"#;

fn gaudin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaudin"))
        .args(args)
        .current_dir(dir)
        .env_remove("GAUDIN_THREADS")
        .output()
        .expect("binary runs")
}

fn setup() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("model.json"), MODEL).unwrap();
    let path = dir.path().to_path_buf();
    (dir, path)
}

fn solve_all(dir: &Path) {
    let out = gaudin(&["solve", "model.json", "--all", "--out", "sol.json"], dir);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn solve_all_writes_every_state_and_a_manifest() {
    let (_t, dir) = setup();
    solve_all(&dir);
    let records: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("sol.json")).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 16);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("sol.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_is_reproducible() {
    let (_t, dir) = setup();
    solve_all(&dir);
    let first = fs::read(dir.join("sol.json")).unwrap();
    let hash = |d: &Path| {
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join("sol.json.manifest.json")).unwrap()).unwrap();
        m["config_hash"].clone()
    };
    let h1 = hash(&dir);
    solve_all(&dir);
    assert_eq!(first, fs::read(dir.join("sol.json")).unwrap());
    assert_eq!(h1, hash(&dir));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let (_t, dir) = setup();
    let out = gaudin(&["solve", "model.json", "--sector", "5", "--out", "x.json"], &dir);
    assert_eq!(out.status.code(), Some(1));
    let out = gaudin(&["solve", "model.json", "--out", "x.json"], &dir);
    assert_eq!(out.status.code(), Some(1));
    fs::write(dir.join("bad.json"), "{\"epsilons\": [1, 2],").unwrap();
    let out = gaudin(&["solve", "bad.json", "--all", "--out", "x.json"], &dir);
    assert_eq!(out.status.code(), Some(1));
    fs::write(dir.join("dup.json"), r#"{"epsilons": [1, 1], "g": 1}"#).unwrap();
    let out = gaudin(&["solve", "dup.json", "--all", "--out", "x.json"], &dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.join("x.json").exists());
}

#[test]
fn bad_thread_setting_is_an_input_error() {
    let (_t, dir) = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_gaudin"))
        .args(["solve", "model.json", "--all", "--out", "x.json"])
        .current_dir(&dir)
        .env("GAUDIN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn formfactor_table_has_vacuum_row_and_flags() {
    let (_t, dir) = setup();
    solve_all(&dir);
    let out = gaudin(
        &[
            "formfactor",
            "model.json",
            "sol.json",
            "--op",
            "sz",
            "--site",
            "2",
            "--out",
            "sz.csv",
        ],
        &dir,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("sz.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bra_id,ket_id,site,operator,value,flag"));
    assert_eq!(lines.next(), Some("0,0,2,sz,-0.5,"));
    assert_eq!(csv.lines().count(), 1 + 16 * 16);

    let out = gaudin(
        &[
            "formfactor",
            "model.json",
            "sol.json",
            "--op",
            "sp",
            "--site",
            "0",
            "--out",
            "sp.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("sp.csv")).unwrap();
    let flagged: Vec<&str> = csv
        .lines()
        .skip(1)
        .filter(|l| l.ends_with("sector_mismatch"))
        .collect();
    assert_eq!(flagged.len(), 256 - 56);
    assert!(flagged.iter().all(|l| l.split(',').nth(4) == Some("0")));
}

#[test]
fn formfactor_needs_connected_sectors() {
    let (_t, dir) = setup();
    let out = gaudin(
        &["solve", "model.json", "--sector", "2", "--out", "two.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let out = gaudin(
        &[
            "formfactor",
            "model.json",
            "two.json",
            "--op",
            "sp",
            "--site",
            "0",
            "--out",
            "x.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    let out = gaudin(
        &[
            "formfactor",
            "model.json",
            "two.json",
            "--op",
            "sz",
            "--site",
            "9",
            "--out",
            "x.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
}

fn tamper(dir: &Path) {
    let text = fs::read_to_string(dir.join("sol.json")).unwrap();
    let mut records: serde_json::Value = serde_json::from_str(&text).unwrap();
    let v = &mut records[5]["values"][1];
    *v = serde_json::json!(v.as_f64().unwrap() + 0.01);
    fs::write(dir.join("bad_sol.json"), records.to_string()).unwrap();
}

#[test]
fn tampered_solutions_exit_two() {
    let (_t, dir) = setup();
    solve_all(&dir);
    tamper(&dir);
    let out = gaudin(&["verify", "model.json", "--solutions", "bad_sol.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let out = gaudin(
        &[
            "formfactor",
            "model.json",
            "bad_sol.json",
            "--op",
            "sz",
            "--site",
            "0",
            "--out",
            "x.csv",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let (_t, dir) = setup();
    solve_all(&dir);
    let out = gaudin(&["verify", "model.json", "--solutions", "sol.json"], &dir);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("Sz coefficient sign +1"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn dynamics_starts_at_coherence_product_and_is_deterministic() {
    let (_t, dir) = setup();
    let params = r#"{"B": 1.0, "A": [1.0, 0.7, 0.4], "alpha": [0.6, 0.0], "beta": [0.0, 0.8],
        "occupation": [1], "times": {"start": 0, "stop": 2, "count": 5},
        "sampling": {"monte_carlo": {"count": 4, "seed": 9}}}"#;
    fs::write(dir.join("p.json"), params).unwrap();
    let out = gaudin(&["dynamics", "p.json", "--out", "a.csv"], &dir);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = gaudin(&["dynamics", "p.json", "--out", "b.csv"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let a = fs::read_to_string(dir.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.join("b.csv")).unwrap());
    assert!(a.starts_with("t,re,im,std_error\n"));

    let full = params.replace(r#"{"monte_carlo": {"count": 4, "seed": 9}}"#, r#""full""#);
    fs::write(dir.join("f.json"), full).unwrap();
    let out = gaudin(&["dynamics", "f.json", "--out", "f.csv"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("f.csv")).unwrap();
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    // conj(alpha) beta = 0.6 * 0.8i
    assert!(first[0] == 0.0 && first[1].abs() < 1e-8 && (first[2] - 0.48).abs() < 1e-8);
}

#[test]
fn dynamics_rejects_unnormalized_state() {
    let (_t, dir) = setup();
    let params = r#"{"B": 1.0, "A": [1.0, 0.7], "alpha": [0.9, 0.0], "beta": [0.9, 0.0],
        "occupation": [], "times": {"start": 0, "stop": 1, "count": 3}}"#;
    fs::write(dir.join("p.json"), params).unwrap();
    let out = gaudin(&["dynamics", "p.json", "--out", "a.csv"], &dir);
    assert_eq!(out.status.code(), Some(1));
}
