//! Drives the `ilm` binary on a reduced 6-bit configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ilm_cli::output::parse_baseline_value;

const SMALL_CONFIG: &str = "\
# reduced problem for fast tests
n1 = 6
n2 = 7
n3 = 6
bottleneck_size = 20
auto_pool_size = 40
r = 3
epochs = 5
generations = 4
baseline_samples = 200
seed = 17
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ilm"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("test.cfg"), SMALL_CONFIG).unwrap();
    dir
}

fn ilm(dir: &Path, args: &[&str]) -> std::process::Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn run_writes_expected_rows() {
    let dir = scratch("run_rows");
    let out = ilm(&dir, &["run", "--config", "test.cfg", "--p", "0.75", "--runs", "3", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.join("o/trajectories.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "run,p,generation,x,c,s,a,b,x_raw,c_raw,s_raw,a_raw,b_raw");
    assert_eq!(lines.len() - 1, 3 * 5);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 13);
        assert_eq!(cols[0], (i / 5).to_string());
        assert_eq!(cols[2], (i % 5).to_string());
        assert_eq!(cols[5].is_empty(), i % 5 == 0, "s column at generation {}", i % 5);
        assert_eq!(cols[10].is_empty(), i % 5 == 0);
    }
    assert!(dir.join("o/summary.csv").exists());
    assert!(read(dir.join("o/manifest.txt")).contains("config.n1 = 6"));
}

#[test]
fn pure_parent_starts_at_one() {
    let dir = scratch("pure_parent");
    let out = ilm(&dir, &["run", "--config", "test.cfg", "--p", "1.0", "--runs", "1", "--out", "o"]);
    assert!(out.status.success());
    let csv = read(dir.join("o/trajectories.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], "1.000000");
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = scratch("repeat");
    for (out, jobs) in [("a", "1"), ("b", "2")] {
        let o = ilm(&dir, &["run", "--config", "test.cfg", "--runs", "3", "--jobs", jobs, "--out", out]);
        assert!(o.status.success());
    }
    for f in ["trajectories.csv", "summary.csv", "manifest.txt"] {
        assert_eq!(read(dir.join("a").join(f)), read(dir.join("b").join(f)), "{f}");
    }
}

#[test]
fn single_run_reproduces_sweep_rows() {
    let dir = scratch("isolated");
    let sweep = ilm(
        &dir,
        &["sweep", "--config", "test.cfg", "--runs", "3", "--out", "s"],
    );
    assert!(sweep.status.success());
    let sweep_csv = read(dir.join("s/trajectories.csv"));
    let single = ilm(
        &dir,
        &["run", "--config", "test.cfg", "--runs", "3", "--p", "0.75", "--run-index", "2", "--out", "r"],
    );
    assert!(single.status.success(), "{}", String::from_utf8_lossy(&single.stderr));
    let single_csv = read(dir.join("r/trajectories.csv"));
    let rows: Vec<&str> = single_csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        assert!(row.starts_with("2,0.75,"));
        assert!(sweep_csv.lines().any(|l| l == *row), "missing {row}");
    }
}

#[test]
fn sweep_summary_shape() {
    let dir = scratch("sweep_summary");
    let out = ilm(&dir, &["sweep", "--config", "test.cfg", "--runs", "2", "--out", "s"]);
    assert!(out.status.success());
    let summary = read(dir.join("s/summary.csv"));
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "p,frac_a_gt_0.9,frac_b_gt_0.9,mean_a,mean_b");
    assert_eq!(lines.len(), 12);
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for frac in &cols[1..3] {
            assert!((0.0..=1.0).contains(frac));
            assert!([0.0, 0.5, 1.0].contains(frac), "denominator is runs");
        }
    }
    assert_eq!(read(dir.join("s/finals.csv")).lines().count(), 1 + 11 * 2);
    assert_eq!(read(dir.join("s/trajectories.csv")).lines().count(), 1 + 11 * 2 * 5);
}

#[test]
fn normalized_columns_follow_from_raw_and_manifest() {
    let dir = scratch("recompute");
    let out = ilm(&dir, &["run", "--config", "test.cfg", "--runs", "2", "--out", "o"]);
    assert!(out.status.success());
    let manifest = read(dir.join("o/manifest.txt"));
    let f0 = parse_baseline_value(&manifest, "f0").unwrap();
    let x0 = parse_baseline_value(&manifest, "x0").unwrap();
    let c0 = parse_baseline_value(&manifest, "c0").unwrap();
    let csv = read(dir.join("o/trajectories.csv"));
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let pairs = [(3, 8, x0), (4, 9, c0), (5, 10, f0), (6, 11, f0), (7, 12, f0)];
        for (norm, raw, base) in pairs {
            if cols[raw].is_empty() {
                continue;
            }
            let raw: f64 = cols[raw].parse().unwrap();
            let expected = format!("{:.6}", (raw - base) / (1.0 - base));
            let got: f64 = cols[norm].parse().unwrap();
            let expected: f64 = expected.parse().unwrap();
            // raw is itself printed with 6 decimals, so allow one unit of rounding
            assert!((got - expected).abs() <= 2e-6, "{line}");
        }
    }
}

#[test]
fn baseline_command() {
    let dir = scratch("baseline");
    let out = ilm(&dir, &["baseline", "--n1", "10", "--n3", "10", "--samples", "1000", "--out", "b"]);
    assert!(out.status.success());
    let text = read(dir.join("b/manifest.txt"));
    let f0 = parse_baseline_value(&text, "f0").unwrap();
    assert_eq!(format!("{f0:.6}"), "0.000977");
    let f0_line = text.lines().find(|l| l.starts_with("baseline.f0")).unwrap();
    assert!(f0_line.ends_with("status=ok"), "{f0_line}");
    assert!(text.lines().find(|l| l.starts_with("baseline.x0")).unwrap().ends_with("status=ok"));
    let out = ilm(&dir, &["baseline", "--samples", "0", "--out", "b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = scratch("errors");
    fs::write(dir.join("bad.cfg"), "n1 = 6\nbottleneck = 3\n").unwrap();
    let out = ilm(&dir, &["run", "--config", "bad.cfg", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`bottleneck`"));
    let out = ilm(&dir, &["run", "--config", "test.cfg", "--p", "1.5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ilm(&dir, &["run", "--loss", "hinge"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_maps_to_exit_three() {
    // saturating sigmoids keep even absurd learning rates finite, so the
    // mapping is checked on the error itself
    let err = ilm_cli::CliError::from(ilm_core::IlmError::NonFiniteLoss);
    assert_eq!(err.exit_code(), 3);
    let err = ilm_cli::CliError::from(ilm_core::IlmError::Probability(2.0));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn compare_labels_every_row() {
    let dir = scratch("compare");
    let out = ilm(
        &dir,
        &[
            "compare", "--config", "test.cfg", "--runs", "2", "--generations", "2",
            "--architectures", "6x7x6:3,6x8x8:3", "--out", "c",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let merged = read(dir.join("c/compare.csv"));
    let lines: Vec<&str> = merged.lines().collect();
    assert_eq!(lines[0], "architecture,p,run,a,b,mean_a");
    assert_eq!(lines.len() - 1, 2 * 11 * 2);
    assert!(lines[1..23].iter().all(|l| l.starts_with("6x7x6,")));
    assert!(lines[23..].iter().all(|l| l.starts_with("6x8x8,")));
    assert!(dir.join("c/6x8x8/summary.csv").exists());
    assert!(read(dir.join("c/6x8x8/manifest.txt")).contains("architecture = 6x8x8"));
}
