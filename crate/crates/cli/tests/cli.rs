use std::path::Path;
use std::process::{Command, Output};

fn helr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helr"))
        .current_dir(dir)
        .env_remove("HELR_STORE")
        .args(args)
        .output()
        .expect("run helr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

fn gen_small_tables(dir: &Path) {
    let o = helr(
        dir,
        &["--seed", "1", "gen-tables", "--k", "6", "--n", "4", "--rho", "0.9", "--theta", "2", "--tables", "t.helr"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(value(&out, "theta"), Some("2"));
    assert!(dir.join("t.helr").exists() && dir.join("t.helr.model").exists());
}

#[test]
fn enroll_then_verify_both_protocols() {
    let dir = tempfile::tempdir().unwrap();
    gen_small_tables(dir.path());
    let common = ["--tables", "t.helr", "--store", "store", "--uid", "alice", "--level", "128"];

    let o = helr(dir.path(), &[&["--seed", "2", "enroll"][..], &common].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).matches("enrolled=").count(), 2);

    // the reference itself as probe: the maximal score for this user
    let o = helr(dir.path(), &[&["--seed", "3", "verify"][..], &common, &["--probe", "store/ref/616c696365.feat"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.matches("decision=match").count(), 2, "{out}");

    let o = helr(dir.path(), &[&["--seed", "4", "verify"][..], &common, &["--impostor", "--transport", "tcp"]].concat());
    let out = stdout(&o);
    let score: i64 = value(&out, "plaintext_score").unwrap().parse().unwrap();
    let expected = if score >= 2 { 0 } else { 3 };
    assert_eq!(o.status.code(), Some(expected), "{out}");
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        vec!["gen-tables", "--n", "1"],
        vec!["gen-tables", "--delta", "0"],
        vec!["gen-tables", "--rho-range", "0.9,0.1"],
        vec!["verify", "--uid", "x", "--tables", "missing.helr", "--genuine"],
        vec!["det", "--tables", "missing.helr"],
    ];
    for args in bad {
        let o = helr(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unknown_user_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_small_tables(dir.path());
    let o = helr(dir.path(), &["verify", "--tables", "t.helr", "--store", "s", "--uid", "nobody", "--genuine"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn det_reports_error_rates_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    gen_small_tables(dir.path());
    let o = helr(
        dir.path(),
        &["--seed", "5", "det", "--tables", "t.helr", "--genuine", "2000", "--impostor", "2000", "--csv", "det.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let eer: f64 = value(&out, "eer").unwrap().parse().unwrap();
    let llr: f64 = value(&out, "llr_eer").unwrap().parse().unwrap();
    assert!((0.0..0.5).contains(&eer) && (0.0..0.5).contains(&llr));
    let csv = std::fs::read_to_string(dir.path().join("det.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn attack_reports_expected_outcome() {
    let dir = tempfile::tempdir().unwrap();
    for (script, protocol, code) in [("encrypt-theta", "sh", 0), ("fake-comparison", "mal", 4)] {
        let o = helr(
            dir.path(),
            &["--seed", "7", "attack", "--script", script, "--protocol", protocol, "--level", "128"],
        );
        let out = stdout(&o);
        assert_eq!(o.status.code(), Some(code), "{out}");
        assert_eq!(value(&out, "as_expected"), Some("true"), "{out}");
    }
}

#[test]
fn bench_prints_one_row_per_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let o = helr(
        dir.path(),
        &["--seed", "8", "bench", "--level", "128", "--k", "4", "--n", "4", "--delta", "0.5", "--sessions", "2"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.matches("median_ms=").count(), 2, "{out}");
}

#[test]
fn store_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    gen_small_tables(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_helr"))
        .current_dir(dir.path())
        .env("HELR_STORE", "envstore")
        .args(["enroll", "--tables", "t.helr", "--uid", "bob", "--protocol", "sh", "--level", "128"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("envstore").is_dir());
}
