use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn jumpdiff(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpdiff"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn golden_gap_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = golden("gap-sweep.json");
    let out = jumpdiff(dir.path(), &["gap-sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("conjecture check"), "{summary}");
    assert!(summary.contains("plateau mean 78.9568352087"), "{summary}");
    for f in ["gap-sweep.csv", "gap-sweep-corollary3.csv"] {
        let got = std::fs::read_to_string(dir.path().join("out").join(f)).unwrap();
        let want = std::fs::read_to_string(golden(f)).unwrap();
        assert_eq!(got, want, "{f}");
    }
    assert!(!dir.path().join("out/gap-sweep.svg").exists());
    let rows = std::fs::read_to_string(golden("gap-sweep.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 22);
}

#[test]
fn golden_coupling_tail_and_thread_independence() {
    let cfg = golden("coupling-tail.json");
    let want = std::fs::read(golden("coupling-tail.csv")).unwrap();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let out = jumpdiff(
            dir.path(),
            &["coupling-tail", "--config", cfg.to_str().unwrap(), "--threads", threads],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let got = std::fs::read(dir.path().join("out/coupling-tail.csv")).unwrap();
        assert!(got == want, "threads {threads}");
    }
}

#[test]
fn seed_and_out_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "lemma6-check", "n_paths": 200, "lemma_n": [1], "seed": 1}"#,
    );
    let out = jumpdiff(
        dir.path(),
        &["lemma6-check", "--config", &cfg, "--seed", "9", "--out", "res"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/lemma6-check.csv")).unwrap();
    assert!(csv.starts_with("# {"));
    assert!(csv.contains("\"seed\":9"));
    assert!(csv.contains("\"dir\":\"res\""));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"experiment": "spectrum", "colour": 1}"#,
        r#"{"experiment": "spectrum", "mu_grid": [20, 10]}"#,
        r#"{"experiment": "tv-decay", "dt": 0}"#,
        r#"{"experiment": "spectrum", "spec": {"a": 1, "b": 0, "sigma": 1, "mu": 0, "nu": [[0.5, 1]]}}"#,
        r#"{"experiment": "gap-sweep"}"#,
        r#"not json"#,
    ];
    for json in cases {
        let cfg = write_config(dir.path(), json);
        let out = jumpdiff(dir.path(), &["spectrum", "--config", &cfg]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{json}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = jumpdiff(dir.path(), &["spectrum", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = jumpdiff(dir.path(), &["no-such-experiment", "--config", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "spectrum", "mu_grid": [20], "re_max": 1.0}"#,
    );
    let out = jumpdiff(dir.path(), &["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("enlarge"));
}

#[test]
fn help_documents_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = jumpdiff(dir.path(), &["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for col in [
        "gap_below_lambda0",
        "fraction_x_in_a",
        "lhs_mc",
        "noise_floor",
        "sup_distance",
    ] {
        assert!(text.contains(col), "{col}");
    }
}
