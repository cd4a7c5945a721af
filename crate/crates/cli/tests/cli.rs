use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hadlcp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hadlcp")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// min −x₁ over x₁ + x₂ = 1, x >= 0.
fn write_toy(dir: &Path) {
    std::fs::write(dir.join("toy.A.txt"), "1 1 1\n1 2 1\n").unwrap();
    std::fs::write(
        dir.join("toy.json"),
        r#"{"name": "toy", "m": 1, "n": 2,
            "a": {"rows": 1, "cols": 2, "path": "toy.A.txt"},
            "b": [1.0],
            "objective": {"kind": "quadratic", "c": [-1.0, 0.0]}}"#,
    )
    .unwrap();
}

#[test]
fn solve_simplex_projection_writes_certified_result() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&hadlcp(&["generate", "simplex-projection", "--n", "30", "--seed", "4", "-o", "sp.json"], d)), 0);
    let out = hadlcp(&["solve", "sp.json", "-o", "res.json"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("iter/ldl/pg"));
    let res = read_json(&d.join("res.json"));
    assert_eq!(res["status"], "converged");
    for key in ["Rp", "Rd", "Rc"] {
        assert!(res[key].as_f64().unwrap() <= 1e-6, "{key} = {}", res[key]);
    }
    let x: Vec<f64> = serde_json::from_value(res["x"].clone()).unwrap();
    assert_eq!(x.len(), 30);
    assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(res["trace"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn malformed_matrix_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy(d);
    std::fs::write(d.join("toy.A.txt"), "% header\n1 1 1\n1 two 1\n").unwrap();
    let out = hadlcp(&["solve", "toy.json"], d);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("toy.A.txt:3"));
}

#[test]
fn unknown_flag_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hadlcp(&["solve", "--no-such-flag", "p.json"], dir.path())), 1);
}

#[test]
fn iteration_limit_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&hadlcp(&["generate", "cqp", "--n", "120", "--kappa", "0.01", "-o", "c.json"], d)), 0);
    let out = hadlcp(&["solve", "c.json", "--max-iter", "1", "-o", "res.json"], d);
    assert_eq!(code(&out), 2);
    let res = read_json(&d.join("res.json"));
    assert_eq!(res["status"], "iter_limit");
    assert_eq!(res["trace"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_reproduces_solver_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&hadlcp(&["generate", "cqp", "--n", "80", "--seed", "3", "-o", "c.json"], d)), 0);
    assert_eq!(code(&hadlcp(&["solve", "c.json", "-o", "res.json"], d)), 0);
    let out = hadlcp(&["verify", "c.json", "res.json", "--format", "json"], d);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let res = read_json(&d.join("res.json"));
    for key in ["Rp", "Rd", "Rc"] {
        let a = v["supplied"][key].as_f64().unwrap();
        let b = res[key].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-12, "{key}: {a} vs {b}");
    }
    assert_eq!(v["pass"], true);
}

#[test]
fn verify_rejects_lp_maximizer_with_descent_direction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy(d);
    // x = (0, 1) is stationary in y but c − Aᵀλ = (−1, 0) is not dual feasible.
    std::fs::write(d.join("p.json"), "[0.0, 1.0]").unwrap();
    let out = hadlcp(&["verify", "toy.json", "p.json", "--format", "json"], d);
    assert_eq!(code(&out), 3);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["riemannian_grad_norm"].as_f64().unwrap() < 1e-12);
    assert!(v["primal_violation"].as_f64().unwrap() > 0.1);
    assert!(v["escape_slope"].as_f64().unwrap() < -1e-6);
    let table = hadlcp(&["verify", "toy.json", "p.json"], d);
    assert!(stdout(&table).contains("<grad phi, dir>"));
}

#[test]
fn verify_infeasible_point_fails_on_primal_residual() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy(d);
    std::fs::write(d.join("p.json"), "[0.2, 0.2]").unwrap();
    let out = hadlcp(&["verify", "toy.json", "p.json", "--format", "json"], d);
    assert_eq!(code(&out), 3);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let r = &v["assembled"];
    let rp = r["Rp"].as_f64().unwrap();
    assert!((rp - 0.3).abs() < 1e-12);
    assert!(rp >= r["Rd"].as_f64().unwrap() && rp >= r["Rc"].as_f64().unwrap());
}

#[test]
fn verify_dimension_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_toy(d);
    std::fs::write(d.join("p.json"), "[0.2, 0.2, 0.6]").unwrap();
    assert_eq!(code(&hadlcp(&["verify", "toy.json", "p.json"], d)), 1);
}

fn without_time(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            l.split(',')
                .zip(&header)
                .filter(|(_, h)| !h.ends_with("time"))
                .map(|(v, _)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn bench_grid_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["bench", "--n", "40,60", "--param", "0.1,0.01", "--seeds", "1", "--baseline", "--jobs", "2"];
    let out = hadlcp(&[&args[..], &["-o", "a.csv"]].concat(), d);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(d.join("a.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[0],
        "family,n,m,param,seed,status,Rp,Rd,Rc,obj,time,iter,ldl,pg,base_status,base_obj,base_time,base_iter,rel_gap"
    );
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[5], "converged", "{row}");
        assert!(f[18].parse::<f64>().unwrap() <= 1e-5, "{row}");
    }
    // Same grid again: identical apart from timings.
    assert_eq!(code(&hadlcp(&[&args[..], &["-o", "b.csv"]].concat(), d)), 0);
    let again = std::fs::read_to_string(d.join("b.csv")).unwrap();
    assert_eq!(without_time(&csv), without_time(&again));
}

#[test]
fn bench_marks_time_limited_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = hadlcp(&["bench", "--n", "12,800", "--param", "0.01", "--max-time", "0.02"], dir.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].split(',').nth(5), Some("converged"), "{text}");
    assert_eq!(rows[1].split(',').nth(5), Some("limit"), "{text}");
}

#[test]
fn generate_graph_pair_with_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hadlcp(&["generate", "gw", "--n", "20", "--noise", "0.1", "--seed", "5", "--edges", "g", "-o", "gw.json"], d);
    assert_eq!(code(&out), 0);
    let header = read_json(&d.join("gw.json"));
    assert_eq!(header["objective"]["kind"], "gw");
    assert_eq!(header["m"], 20 + 22 - 1);
    for f in ["source.edges", "target.edges"] {
        let text = std::fs::read_to_string(d.join("g").join(f)).unwrap();
        for line in text.lines().filter(|l| !l.starts_with('%')) {
            let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            assert_eq!(v.len(), 3);
            assert!(v[0] <= v[1] && v[2] > 0.0);
        }
    }
}
