//! Problem files: a JSON header plus matrices in coordinate text form.
//!
//! Coordinate files hold one `i j value` triple per line with 1-based
//! indices; blank lines and lines starting with `%` or `#` are ignored.
//! Matrix paths in the header are relative to the header's directory.
//!
//! ```text
//! {
//!   "name": "cqp", "m": 2, "n": 5,
//!   "a": {"rows": 2, "cols": 5, "path": "cqp.A.txt"},
//!   "b": [1.0, 2.0],
//!   "objective": {"kind": "quadratic", "q": {"rows": 5, "cols": 5, "path": "cqp.Q.txt"}, "c": [...]}
//! }
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{CscMatrix, RealMatrix};
use crate::model::{Objective, ProblemLcp, QuadraticObjective};
use crate::problems::{gw_objective, gwbc_objective, GwInstance};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRef {
    pub rows: usize,
    pub cols: usize,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveHeader {
    Quadratic {
        #[serde(default)]
        q: Option<MatrixRef>,
        c: Vec<f64>,
    },
    Gw {
        a_dist: MatrixRef,
        b_dist: MatrixRef,
        mu: Vec<f64>,
        nu: Vec<f64>,
    },
    Gwbc {
        cs: Vec<MatrixRef>,
        lambdas: Vec<f64>,
        mu: Vec<f64>,
        nus: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemHeader {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub a: MatrixRef,
    pub b: Vec<f64>,
    pub objective: ObjectiveHeader,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// Reads a coordinate file into a `rows × cols` sparse matrix.
pub fn read_coordinate(path: &Path, rows: usize, cols: usize) -> Result<CscMatrix> {
    let text = fs::read_to_string(path)?;
    let mut trip = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(path, lineno, format!("expected `i j value`, found {} fields", fields.len())));
        }
        let idx = |s: &str, bound: usize, what: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| parse_err(path, lineno, format!("invalid {what} index `{s}`")))?;
            if v == 0 || v > bound {
                return Err(parse_err(path, lineno, format!("{what} index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = idx(fields[0], rows, "row")?;
        let j = idx(fields[1], cols, "column")?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("invalid value `{}`", fields[2])))?;
        if !v.is_finite() {
            return Err(parse_err(path, lineno, "non-finite value"));
        }
        trip.push((i, j, v));
    }
    CscMatrix::from_triplets(rows, cols, &trip)
}

/// Writes the nonzeros of `a` in coordinate form. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_coordinate(path: &Path, a: &RealMatrix) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "% {} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
    }
    fs::write(path, out)?;
    Ok(())
}

fn load_matrix(dir: &Path, r: &MatrixRef) -> Result<RealMatrix> {
    let m = read_coordinate(&dir.join(&r.path), r.rows, r.cols)?;
    let total = (r.rows * r.cols).max(1) as f64;
    Ok(if (m.nnz() as f64) < crate::linalg::SPARSE_DENSITY * total {
        RealMatrix::Sparse(m)
    } else {
        RealMatrix::Dense(m.to_dense())
    })
}

fn store_matrix(dir: &Path, stem: &str, tag: &str, a: &RealMatrix) -> Result<MatrixRef> {
    let file = format!("{stem}.{tag}.txt");
    write_coordinate(&dir.join(&file), a)?;
    Ok(MatrixRef { rows: a.nrows(), cols: a.ncols(), path: file })
}

fn split_path(path: &Path) -> (PathBuf, String) {
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "problem".into());
    (dir, stem)
}

/// Writes `prob` to `path` (the JSON header) and sidecar coordinate files
/// next to it.
pub fn write_problem(prob: &ProblemLcp, path: &Path) -> Result<()> {
    let (dir, stem) = split_path(path);
    let a = store_matrix(&dir, &stem, "A", prob.a())?;
    let objective = match prob.objective() {
        Objective::Quadratic(o) => ObjectiveHeader::Quadratic {
            q: o.q().map(|q| store_matrix(&dir, &stem, "Q", q)).transpose()?,
            c: o.c().as_slice().to_vec(),
        },
        Objective::Gw(o) => {
            let inst = o.instance();
            ObjectiveHeader::Gw {
                a_dist: store_matrix(&dir, &stem, "Adist", inst.a_dist())?,
                b_dist: store_matrix(&dir, &stem, "Bdist", inst.b_dist())?,
                mu: inst.mu().as_slice().to_vec(),
                nu: inst.nu().as_slice().to_vec(),
            }
        }
        Objective::Gwbc(o) => ObjectiveHeader::Gwbc {
            cs: o
                .cs()
                .iter()
                .enumerate()
                .map(|(i, c)| store_matrix(&dir, &stem, &format!("C{i}"), c))
                .collect::<Result<_>>()?,
            lambdas: o.lambdas().to_vec(),
            mu: o.mu().as_slice().to_vec(),
            nus: o.nus().iter().map(|v| v.as_slice().to_vec()).collect(),
        },
        Objective::Custom(_) => {
            return Err(Error::InvalidArgument("custom objectives cannot be serialized".into()));
        }
    };
    let header = ProblemHeader {
        name: prob.name().to_string(),
        m: prob.m(),
        n: prob.n(),
        a,
        b: prob.b().as_slice().to_vec(),
        objective,
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(path, json)?;
    Ok(())
}

/// Reads a problem header and its matrices.
pub fn read_problem(path: &Path) -> Result<ProblemLcp> {
    let text = fs::read_to_string(path)?;
    let header: ProblemHeader =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let (dir, _) = split_path(path);
    check_dim(header.m, header.a.rows)?;
    check_dim(header.n, header.a.cols)?;
    check_dim(header.m, header.b.len())?;
    let a = load_matrix(&dir, &header.a)?;
    let b = DVector::from_vec(header.b);
    let objective: Objective = match header.objective {
        ObjectiveHeader::Quadratic { q, c } => {
            check_dim(header.n, c.len())?;
            let c = DVector::from_vec(c);
            match q {
                Some(q) => {
                    check_dim(header.n, q.rows)?;
                    check_dim(header.n, q.cols)?;
                    QuadraticObjective::new(load_matrix(&dir, &q)?, c).into()
                }
                None => QuadraticObjective::linear(c).into(),
            }
        }
        ObjectiveHeader::Gw { a_dist, b_dist, mu, nu } => {
            let inst = GwInstance::new(
                load_matrix(&dir, &a_dist)?,
                load_matrix(&dir, &b_dist)?,
                DVector::from_vec(mu),
                DVector::from_vec(nu),
            )?;
            gw_objective(inst).into()
        }
        ObjectiveHeader::Gwbc { cs, lambdas, mu, nus } => {
            let cs = cs.iter().map(|r| load_matrix(&dir, r)).collect::<Result<_>>()?;
            let nus = nus.into_iter().map(DVector::from_vec).collect();
            gwbc_objective(cs, lambdas, DVector::from_vec(mu), nus)?.into()
        }
    };
    ProblemLcp::new(header.name, a, b, objective)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointFile {
    Array(Vec<f64>),
    Object { x: Vec<f64>, #[serde(default)] lambda: Option<Vec<f64>> },
}

/// Reads a point file: either a JSON array holding `x`, or an object with an
/// `x` field and optionally a `lambda` field (the solver output format).
pub fn read_point(path: &Path) -> Result<(DVector<f64>, Option<DVector<f64>>)> {
    let text = fs::read_to_string(path)?;
    let pf: PointFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    Ok(match pf {
        PointFile::Array(x) => (DVector::from_vec(x), None),
        PointFile::Object { x, lambda } => (DVector::from_vec(x), lambda.map(DVector::from_vec)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjectiveOracle;
    use crate::problems::{gen_knn_graph, gen_random_cqp, gw_problem, simplex_projection_problem};

    #[test]
    fn quadratic_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let prob = gen_random_cqp(12, 3, 0.1, 2).unwrap();
        let path = dir.path().join("cqp.json");
        write_problem(&prob, &path).unwrap();
        let back = read_problem(&path).unwrap();
        assert_eq!(back.a().to_dense(), prob.a().to_dense());
        assert_eq!(back.b(), prob.b());
        let x = DVector::from_fn(12, |i, _| i as f64 * 0.1);
        assert_eq!(back.objective().value(&x), prob.objective().value(&x));
    }

    #[test]
    fn gw_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pair = gen_knn_graph(10, 0.1, 3).unwrap();
        let inst = GwInstance::uniform(pair.source.into(), pair.target.into()).unwrap();
        let prob = gw_problem(inst).unwrap();
        let path = dir.path().join("gw.json");
        write_problem(&prob, &path).unwrap();
        let back = read_problem(&path).unwrap();
        let x = DVector::from_element(prob.n(), 0.01);
        // Reloaded dense matrices sum in a different order than sparse ones.
        let (g1, g2) = (back.objective().gradient(&x), prob.objective().gradient(&x));
        assert!((&g1 - &g2).amax() <= 1e-12 * (1.0 + g2.amax()));
        assert_eq!(back.a().to_dense(), prob.a().to_dense());
    }

    #[test]
    fn malformed_coordinate_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let prob = simplex_projection_problem(&DVector::from_vec(vec![0.1, 0.2])).unwrap();
        let path = dir.path().join("s.json");
        write_problem(&prob, &path).unwrap();
        fs::write(dir.path().join("s.A.txt"), "% header\n1 1 1.0\n1 x 1.0\n").unwrap();
        match read_problem(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("column"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(dir.path().join("s.A.txt"), "1 3 1.0\n").unwrap();
        assert!(matches!(read_problem(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn point_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        fs::write(&p, "[0.25, 0.75]").unwrap();
        assert_eq!(read_point(&p).unwrap().0.as_slice(), &[0.25, 0.75]);
        fs::write(&p, r#"{"x": [1.0], "lambda": [2.0], "status": "converged"}"#).unwrap();
        let (x, l) = read_point(&p).unwrap();
        assert_eq!((x[0], l.unwrap()[0]), (1.0, 2.0));
    }
}
