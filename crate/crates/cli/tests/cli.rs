use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsvar_core::problem::{builtin, write_problem};

fn nsvar(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsvar"))
        .arg("solve")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn missing_problem_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsvar(&["no/such/problem.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
}

#[test]
fn bad_settings_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nsvar(&["example2", "--grid", "21,11"], dir.path()).status.code(), Some(1));
    assert_eq!(nsvar(&["example2", "--eps", "-1"], dir.path()).status.code(), Some(1));
    assert_eq!(nsvar(&["example2", "--frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn example1_converges_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsvar(&["example1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "x1", "z1"]);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1].abs() <= 1e-12));
    let s = summary(dir.path());
    assert_eq!(s["status"], "converged");
    assert!(s["j"].as_f64().unwrap().abs() <= 1e-12);
    assert!(s["endpoint_error"].is_null());
}

#[test]
fn summary_endpoint_matches_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsvar(&["example3", "--grid", "11", "--lambda-max", "20", "--max-iters", "200"], dir.path());
    assert!(matches!(o.status.code(), Some(0 | 2)));
    let (_, rows) = csv(&dir.path().join("trajectory.csv"));
    // trapezoid integral of the z columns from x0 = 0, target 0
    let mut end = [0.0; 2];
    for w in rows.windows(2) {
        let h = w[1][0] - w[0][0];
        for (k, e) in end.iter_mut().enumerate() {
            *e += 0.5 * h * (w[0][3 + k] + w[1][3 + k]);
        }
    }
    let last = rows.last().unwrap();
    let s = summary(dir.path());
    let recovered = (end[0] * end[0] + end[1] * end[1]).sqrt();
    let nodal = (last[1] * last[1] + last[2] * last[2]).sqrt();
    assert!((s["endpoint_error"].as_f64().unwrap() - recovered).abs() <= 1e-12);
    assert!((s["x_endpoint_error"].as_f64().unwrap() - nodal).abs() <= 1e-12);
}

#[test]
fn convergence_log_descends_within_stages() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsvar(&["example2", "--emit-plot-data"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["k", "I", "J", "psi", "phi", "vnorm", "lambda", "gamma", "N"]);
    for w in rows.windows(2) {
        if w[0][6] == w[1][6] && w[0][8] == w[1][8] {
            assert!(w[1][1] <= w[0][1]);
        }
    }
    let (plot_header, plot) = csv(&dir.path().join("directions.csv"));
    assert_eq!(plot_header, ["k", "t", "x1", "z1", "vx1", "vz1"]);
    let expected: f64 = rows.iter().map(|r| r[8]).sum();
    assert_eq!(plot.len() as f64, expected);
}

#[test]
fn written_problem_files_solve() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bend.txt");
    fs::write(&file, write_problem(&builtin("example2").unwrap().spec)).unwrap();
    let out = dir.path().join("out");
    let o = nsvar(&[file.to_str().unwrap(), "--grid", "11,21,41", "--max-iters", "500"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out)["problem"], "example2");
    assert!(summary(&out)["j"].as_f64().unwrap() <= 5e-3);
}

#[test]
fn malformed_problem_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    fs::write(&file, "n = 1\nT = 1\nintegrand = abs(x1\n").unwrap();
    let o = nsvar(&[file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
