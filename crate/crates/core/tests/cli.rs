use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_toeplitz-forge");

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(EXE);
    cmd.args(args).env_remove("TOEPLITZ_FORGE_THREADS");
    if let Some(n) = threads {
        cmd.env("TOEPLITZ_FORGE_THREADS", n.to_string());
    }
    cmd.output().expect("failed to spawn binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Compares `actual` against `tests/data/golden/<name>`; `BLESS=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden").join(name);
    if std::env::var_os("BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from golden file {name}");
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path_in(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn pos_count_golden() {
    let out = run(&["pos-count", "--condition", &data("cond.txt")], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_golden("pos_count.txt", &String::from_utf8(out.stdout).unwrap());
}

#[test]
fn fuse_golden() {
    let dir = tmp();
    let (q, r) = (path_in(&dir, "q.txt"), path_in(&dir, "r.txt"));
    let args = [
        "fuse", "--condition", &data("cond.txt"), "--name", "2:mup:1", "--name", "0:count:6", "--horizon", "7", "--out", &q,
        "--report", &r,
    ];
    let out = run(&args, None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_golden("fuse_condition.txt", &fs::read_to_string(&q).unwrap());
    assert_golden("fuse_report.txt", &fs::read_to_string(&r).unwrap());
}

#[test]
fn amalgamate_golden() {
    let dir = tmp();
    let (a, r) = (path_in(&dir, "a.txt"), path_in(&dir, "r.txt"));
    let out = run(&["amalgamate", "--chain", &data("chain.txt"), "--out", &a, "--report", &r], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_golden("amalgamate_condition.txt", &fs::read_to_string(&a).unwrap());
    assert_golden("amalgamate_report.txt", &fs::read_to_string(&r).unwrap());
}

#[test]
fn estimate_golden() {
    for source in ["tm", "r0"] {
        let args =
            ["estimate", "--matrix", &data("points.txt"), "--family", &data("family_small.txt"), "--source", source, "--row", "4", "--k", "2"];
        let out = run(&args, None);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert_golden(&format!("estimate_{source}.txt"), &String::from_utf8(out.stdout).unwrap());
    }
}

#[test]
fn verify_regular_golden() {
    let out = run(&["verify", "--matrix", &data("points.txt"), "--check", "regular"], None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_golden("verify_regular.txt", &String::from_utf8(out.stdout).unwrap());
}

#[test]
fn missing_family_is_usage_error() {
    let dir = tmp();
    let out = run(&["synthesize", "--k-max", "4", "--out", &path_in(&dir, "m.txt")], None);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Usage"));
    assert!(!dir.path().join("m.txt").exists());
}

#[test]
fn corrupted_header_is_usage_error() {
    let dir = tmp();
    let bad = path_in(&dir, "bad.txt");
    fs::write(&bad, "matrix v9\nrow 0: mdn=0 mup=1 0:1\n").unwrap();
    let out = run(&["verify", "--matrix", &bad, "--check", "regular"], None);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("mismatch"));
}

#[test]
fn failed_check_exits_one() {
    // |f(j) - f(j+1)| ≥ 3/4 has probability 1/2 for raw bits
    let args = ["verify", "--matrix", &data("points.txt"), "--family", &data("family_small.txt"), "--check", "measure", "--k", "2", "--rows", "4"];
    let out = run(&args, None);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().contains("outcome=fail"));
}

#[test]
fn inconclusive_exits_zero() {
    let args = [
        "verify", "--matrix", &data("points.txt"), "--family", &data("family_wide.txt"), "--check", "measure", "--k", "1", "--rows", "4",
        "--samples", "10",
    ];
    let out = run(&args, None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("outcome=pass"));
    assert!(text.contains("outcome=inconclusive"));
}

#[test]
fn small_horizon_is_exhaustion() {
    let dir = tmp();
    let m = path_in(&dir, "m.txt");
    let args = ["synthesize", "--family", &data("family8.txt"), "--k-max", "4", "--horizon", "100", "--budget", "64", "--samples", "50", "--out", &m];
    let out = run(&args, None);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("thinning"));
    assert!(!Path::new(&m).exists());
}

#[test]
fn bad_thread_count_is_usage_error() {
    let mut cmd = Command::new(EXE);
    let out = cmd.args(["pos-count", "--condition", &data("cond.txt")]).env("TOEPLITZ_FORGE_THREADS", "0").output().unwrap();
    assert_eq!(code(&out), 2);
}

/// Every file a subcommand writes, for one worker count.
fn outputs(threads: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let p = |n: &str| dir.join(n).display().to_string();
    let family = data("family8.txt");
    let runs: Vec<Vec<String>> = vec![
        vec!["synthesize", "--family", &family, "--k-max", "4", "--horizon", "600", "--budget", "256", "--samples", "200", "--seed", "1", "--out", &p("m.txt")],
        vec!["verify", "--matrix", &p("m.txt"), "--family", &family, "--samples", "500", "--seed", "2", "--report", &p("v.txt")],
        vec!["estimate", "--matrix", &p("m.txt"), "--family", &family, "--source", "rm", "--row", "6", "--samples", "500", "--report", &p("e.txt")],
        vec!["amalgamate", "--chain", &data("chain.txt"), "--out", &p("a.txt"), "--report", &p("ar.txt")],
        vec!["fuse", "--condition", &data("cond.txt"), "--name", "2:mup:1", "--horizon", "7", "--out", &p("f.txt"), "--report", &p("fr.txt")],
        vec!["pos-count", "--condition", &data("cond.txt"), "--out", &p("pc.txt")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in &runs {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&refs, Some(threads));
        assert!(code(&out) <= 1, "{:?}: {}", args, stderr(&out));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&f).unwrap())).collect()
}

#[test]
fn outputs_do_not_depend_on_workers_or_repetition() {
    let runs: Vec<(usize, tempfile::TempDir)> = [1, 1, 8, 8].into_iter().map(|n| (n, tmp())).collect();
    let all: Vec<Vec<(String, Vec<u8>)>> = runs.iter().map(|(n, d)| outputs(*n, d.path())).collect();
    assert_eq!(all[0].len(), 8);
    for (i, other) in all.iter().enumerate().skip(1) {
        assert_eq!(all[0].len(), other.len());
        for (x, y) in all[0].iter().zip(other) {
            assert_eq!(x.0, y.0);
            assert!(x.1 == y.1, "{} differs in run {i} ({} workers)", x.0, runs[i].0);
        }
    }
}
