use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use shockasep::lattice::decode_rle;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shockasep"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Column `col` of a CSV with a header line.
fn column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    assert_eq!(run(&["dist", "fmp", "--M", "two", "--s", "1"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "nosuch"]).status.code(), Some(2));
}

#[test]
fn domain_error_is_a_usage_error() {
    let o = run(&["dist", "v0", "--p", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn large_m_is_declared_unsupported() {
    let o = run(&["dist", "fmp", "--M", "40", "--p", "0.7", "--s", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-convergence"));
}

#[test]
fn fmp_methods_agree() {
    let a = run(&["dist", "fmp", "--M", "3", "--s", "-1,0.5,2", "--method", "contour"]);
    let b = run(&["dist", "fmp", "--M", "3", "--s", "-1,0.5,2", "--method", "residue"]);
    assert!(a.status.success() && b.status.success());
    let (fa, fb) = (column(&stdout(&a), 3), column(&stdout(&b), 3));
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
    assert!(fa.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn v0_table_is_a_pmf_centred_at_minus_one() {
    let o = run(&["dist", "v0", "--p", "0.7", "--range", "40"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("i,pmf\n"));
    let pmf = column(&text, 1);
    assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    // index k holds i = k - 40; reflection i ↦ -2 - i
    for k in 0..=78 {
        assert!((pmf[k] - pmf[78 - k]).abs() < 1e-9);
    }
}

#[test]
fn pmf_and_diff_tables() {
    let pmf = column(&stdout(&run(&["dist", "pmfP", "--M", "1", "--Lmax", "14"])), 1);
    assert_eq!(pmf.len(), 15);
    assert!(pmf.iter().sum::<f64>() > 1.0 - 1e-4);
    let limit = stdout(&run(&["dist", "diff", "--limit", "--s", "0"]));
    assert!((column(&limit, 1)[0] - 0.5).abs() < 1e-6);
    let finite = column(&stdout(&run(&["dist", "diff", "--M", "1"])), 1);
    assert!(finite.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(run(&["dist", "diff"]).status.code(), Some(2));
}

#[test]
fn simulate_rows_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump.txt");
    let o = run(&[
        "simulate",
        "--t",
        "40",
        "--replicas",
        "4",
        "--seed",
        "9",
        "--dump",
        dump.to_str().unwrap(),
        "--every",
        "10",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(shockasep::shock::CSV_HEADER));
    assert_eq!(lines.count(), 4);
    let snaps = fs::read_to_string(&dump).unwrap();
    let rows: Vec<&str> = snaps.lines().collect();
    assert_eq!(rows.len(), 5);
    let widths: Vec<usize> = rows
        .iter()
        .map(|r| {
            let (t, rle) = r.split_once('\t').unwrap();
            t.parse::<f64>().unwrap();
            let cells = decode_rle(rle).unwrap();
            assert_eq!(cells.iter().filter(|s| s.symbol() == 'S').count(), 1);
            cells.len()
        })
        .collect();
    assert!(widths.windows(2).all(|w| w[0] == w[1]));
}

fn experiment_json(dir: &Path, extra: &[&str]) -> (Option<i32>, String) {
    let mut args = vec![
        "experiment",
        "yours",
        "--t",
        "15",
        "--replicas",
        "200",
        "--seed",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = run(&args);
    let json = fs::read_to_string(dir.join("yours.json")).unwrap();
    assert_eq!(stdout(&o), json);
    (o.status.code(), json)
}

#[test]
fn experiment_reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let (_, ja) = experiment_json(a.path(), &["--threads", "1"]);
    let (_, jb) = experiment_json(b.path(), &["--threads", "1"]);
    let (_, jc) = experiment_json(c.path(), &["--threads", "3"]);
    assert_eq!(ja, jb);
    assert_eq!(ja, jc);
    assert!(a.path().join("yours.csv").exists());
    assert!(a.path().join("yours.timing.json").exists());
}

#[test]
fn tolerance_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // a total-variation distance is never below zero
    let (code, json) = experiment_json(dir.path(), &["--tol", "tv=0"]);
    assert_eq!(code, Some(1));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(v["params"]["tolerances"]["tv"], 0.0);
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# overrides\nreplicas = 50\nseed = 5\ntol.tsw_se = 9\n\np = 0.75\n").unwrap();
    let (_, json) = experiment_json(dir.path(), &["--config", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    // replicas and seed are given on the command line as well
    assert_eq!(v["params"]["replicas"], 200);
    assert_eq!(v["params"]["seed"], 11);
    assert_eq!(v["params"]["p"], 0.75);
    assert_eq!(v["params"]["tolerances"]["tsw_se"], 9.0);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "replicas 50\n").unwrap();
    let o = run(&["dist", "v0", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn density_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "density",
        "--t",
        "40",
        "--replicas",
        "20",
        "--bin",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(text.starts_with("x,xi,density,oracle\n"));
    for d in column(&text, 2).into_iter().chain(column(&text, 3)) {
        assert!((0.0..=1.0).contains(&d));
    }
}
