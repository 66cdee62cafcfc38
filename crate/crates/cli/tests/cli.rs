use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn lstaq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lstaq")).args(args).output().expect("binary runs")
}

fn translate_into(dir: &Path, extra: &[&str]) -> Output {
    let spec = fixture("bv3.qspec");
    let mut args = vec!["translate", spec.to_str().unwrap(), "-o", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    lstaq(&args)
}

#[test]
fn translation_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(translate_into(a.path(), &[]).status.success());
    assert!(translate_into(b.path(), &[]).status.success());
    for file in ["bv3_0.lsta", "bv3_1.lsta"] {
        let x = fs::read_to_string(a.path().join(file)).unwrap();
        let y = fs::read_to_string(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
        assert!(x.starts_with("lsta v1\nsemiring "), "{file}");
    }
}

#[test]
fn stats_and_order_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = translate_into(dir.path(), &["--stats", "--order-report"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("qubit order:"), "{stdout}");

    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bv3.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["qubits"], 7);
    let per = stats["assertions"].as_array().unwrap();
    assert_eq!(per.len(), 2);
    for r in per {
        assert_eq!(r["L"], 7);
        assert_eq!(r["within_envelope"], true);
    }
    let order = fs::read_to_string(dir.path().join("bv3.order.txt")).unwrap();
    // the secret and its copy share slots, so they interleave
    assert!(order.contains("qubit order: 1 4 2 5 3 6 7"), "{order}");
}

#[test]
fn oracle_lists_every_state() {
    let out = lstaq(&["oracle", fixture("bv3.qspec").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("|")).count(), 16, "{stdout}");
}

#[test]
fn fmt_round_trips() {
    let out = lstaq(&["fmt", fixture("bv3.qspec").to_str().unwrap()]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again.qspec");
    fs::write(&again, &out.stdout).unwrap();
    let twice = lstaq(&["fmt", again.to_str().unwrap()]);
    assert_eq!(out.stdout, twice.stdout);
}

#[test]
fn bench_rejects_unknown_families_and_bad_sizes() {
    assert_eq!(lstaq(&["bench", "nosuch", "4"]).status.code(), Some(1));
    let out = lstaq(&["bench", "bv", "4"]);
    assert_eq!(out.status.code(), Some(1), "even qubit counts are not a BV instance");
    let ok = lstaq(&["bench", "bv", "9"]);
    assert!(ok.status.success());
    assert_eq!(String::from_utf8_lossy(&ok.stdout).lines().count(), 2);
}
