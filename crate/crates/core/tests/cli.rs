use std::path::Path;
use std::process::{Command, Output};

use blocktri::io::{read_btd, read_kalman_system};

fn blocktri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocktri"))
        .args(args)
        .env("BLOCKTRI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("{key} missing in {out}"))
        .parse()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_solve_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sys.btd");
    let o = blocktri(&[
        "generate",
        "--N",
        "300",
        "--n",
        "3",
        "--d",
        "2",
        "--seed",
        "5",
        "--out",
        path_str(&input),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let expected_len = 40 + 8 * (300 * 9 + 299 * 9 + 300 * 3 * 2);
    assert_eq!(std::fs::metadata(&input).unwrap().len(), expected_len);

    let rec_out = dir.path().join("rec.btd");
    let o = blocktri(&[
        "solve",
        "--in",
        path_str(&input),
        "--out",
        path_str(&rec_out),
        "--n-star",
        "8",
        "--rho",
        "3",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(field(&text, "relative_residual") <= 1e-10);
    assert!(field(&text, "factor_ms") >= 0.0 && field(&text, "solve_ms") >= 0.0);

    let ser_out = dir.path().join("ser.btd");
    let o = blocktri(&[
        "solve",
        "--in",
        path_str(&input),
        "--out",
        path_str(&ser_out),
        "--serial",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("solver: serial"));

    let (a, x_rec) = read_btd(&rec_out).unwrap();
    let (_, x_ser) = read_btd(&ser_out).unwrap();
    let (a0, _) = read_btd(&input).unwrap();
    assert_eq!(a, a0);
    let (x_rec, x_ser) = (x_rec.unwrap(), x_ser.unwrap());
    let scale = x_ser.max_abs();
    assert!(x_rec.max_abs_diff(&x_ser) <= 1e-11 * scale);

    let o = blocktri(&["verify", "--in", path_str(&input), "--n-star", "4", "--rho", "2"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("status: PASS"));
    assert!(field(&text, "recursive_vs_dense") <= 1e-10);
}

#[test]
fn solve_reports_indefinite_input_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.btd");
    let (a, b) = blocktri::synth::generate_spd_btd(20, 2, 1, 1);
    let mut diag = a.diag_arena().to_vec();
    diag[..4].iter_mut().for_each(|v| *v = -*v);
    let bad = blocktri::BlockTridiagonalMatrix::new(20, 2, diag, a.sub_arena().to_vec()).unwrap();
    blocktri::io::write_btd(&path, &bad, Some(&b)).unwrap();
    let o = blocktri(&["solve", "--in", path_str(&path), "--n-star", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("factorization") && err.contains("not positive definite"),
        "{err}"
    );
}

#[test]
fn bad_magic_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.btd");
    std::fs::write(&path, [b'X'; 64]).unwrap();
    let o = blocktri(&["solve", "--in", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(blocktri(&["solve"]).status.code(), Some(2));
    assert_eq!(
        blocktri(&["generate", "--N", "0", "--n", "2", "--out", "/tmp/x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(blocktri(&["solve", "--in", "x", "--rho", "0"]).status.code(), Some(2));
    assert_eq!(
        blocktri(&["solve", "--in", "/nonexistent/x.btd"]).status.code(),
        Some(1)
    );
}

#[test]
fn bench_custom_sweep_csv() {
    let o = blocktri(&[
        "bench",
        "--sweep",
        "64:4,33:2",
        "--runs",
        "2",
        "--format",
        "csv",
        "--n-star",
        "8",
        "--rho",
        "2",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let keys: Vec<String> = text
        .lines()
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "N,n,metric",
            "64,4,Fact.",
            "64,4,Solve",
            "64,4,Residual",
            "33,2,Fact.",
            "33,2,Solve",
            "33,2,Residual"
        ]
    );
    for line in text.lines().filter(|l| l.contains("Residual")) {
        let rec: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rec <= 1e-10);
    }
}

#[test]
fn bench_markdown_dry_run() {
    let o = blocktri(&["bench", "--sweep", "nn65536", "--dry-run"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = blocktri(&["bench", "--sweep", "40:2", "--runs", "1", "--format", "md"]);
    assert!(stdout(&o).starts_with("| N | n | metric | recursive | serial |"));
}

#[test]
fn kalman_writes_system_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.ksm");
    let o = blocktri(&[
        "kalman",
        "--n",
        "8",
        "--m",
        "16",
        "--N",
        "40",
        "--seed",
        "3",
        "--out",
        path_str(&path),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(field(&stdout(&o), "relative_residual") <= 1e-10);
    let (header, a, b) = read_kalman_system(&path).unwrap();
    assert_eq!(
        (header.horizon, header.state_dim, header.obs_dim, header.seed),
        (40, 8, 16, 3)
    );
    assert_eq!((a.num_blocks(), a.block_dim(), b.cols()), (40, 8, 1));
}
