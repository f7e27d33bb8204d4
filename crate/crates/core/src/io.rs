//! CSV and JSON input/output.

use crate::analysis::triangle_gradients;
use crate::assembly::ProblemKind;
use crate::eigensolver::EigenSolution;
use crate::error::{Result, SloshError};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Reads `(y, g)` samples from a two-column CSV file with a header row.
pub fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(SloshError::Parse(format!(
                "{}: row {} needs two columns (y, g)",
                path.display(),
                line + 1
            )));
        }
        let field = |k: usize| -> Result<f64> {
            record[k].parse::<f64>().map_err(|_| {
                SloshError::Parse(format!(
                    "{}: row {}: '{}' is not a number",
                    path.display(),
                    line + 1,
                    &record[k]
                ))
            })
        };
        samples.push((field(0)?, field(1)?));
    }
    Ok(samples)
}

/// Header of the eigenvalue table.
pub const EIGEN_HEADER: [&str; 7] = ["domain", "m", "kind", "k", "nu", "gap", "residual"];
pub const FIELD_HEADER: [&str; 3] = ["r", "y", "psi"];
pub const GRADIENT_HEADER: [&str; 2] = ["dpsidr", "dpsidy"];

/// Shortest decimal form that keeps all 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One line of the eigenvalue table; `k` counts from 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRow {
    pub domain: String,
    pub m: u32,
    pub kind: ProblemKind,
    pub k: usize,
    pub nu: f64,
    pub gap: Option<f64>,
    pub residual: f64,
}

impl EigenRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.domain.clone(),
            self.m.to_string(),
            self.kind.to_string(),
            self.k.to_string(),
            fmt_f64(self.nu),
            self.gap.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.residual),
        ]
    }
}

/// Table rows for every eigenpair of a solution.
pub fn eigen_rows(domain: &str, solution: &EigenSolution) -> Vec<EigenRow> {
    let problem = solution.problem();
    solution
        .eigenvalues
        .iter()
        .zip(&solution.residuals)
        .enumerate()
        .map(|(i, (&nu, &residual))| EigenRow {
            domain: domain.to_string(),
            m: problem.m(),
            kind: problem.kind(),
            k: i + 1,
            nu,
            gap: solution.gap,
            residual,
        })
        .collect()
}

/// Writes a CSV file with the given header and pre-formatted records.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[&str], records: &[Vec<S>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for record in records {
        if record.len() != header.len() {
            return Err(SloshError::InvalidParameter(format!(
                "record with {} fields for a {}-column table",
                record.len(),
                header.len()
            )));
        }
        writer.write_record(record.iter().map(|s| s.as_ref()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_eigen_csv(path: &Path, rows: &[EigenRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(EigenRow::record).collect();
    write_table(path, &EIGEN_HEADER, &records)
}

/// Nodal values `r,y,psi`.
pub fn write_field_csv(path: &Path, mesh: &Mesh, field: &[f64]) -> Result<()> {
    check_len(field.len(), mesh.n_nodes(), "field")?;
    let records: Vec<Vec<String>> = mesh
        .nodes
        .iter()
        .zip(field)
        .map(|(p, &v)| vec![fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(v)])
        .collect();
    write_table(path, &FIELD_HEADER, &records)
}

/// Per-triangle P1 gradients `dpsidr,dpsidy`, in triangle order.
pub fn write_gradient_csv(path: &Path, mesh: &Mesh, field: &[f64]) -> Result<()> {
    check_len(field.len(), mesh.n_nodes(), "field")?;
    let records: Vec<Vec<String>> = triangle_gradients(mesh, field)
        .iter()
        .map(|g| vec![fmt_f64(g[0]), fmt_f64(g[1])])
        .collect();
    write_table(path, &GRADIENT_HEADER, &records)
}

/// Writes `nodes.csv`, `tris.csv` and `bnd.csv` into `dir` and returns their paths.
pub fn write_mesh(dir: &Path, mesh: &Mesh) -> Result<Vec<PathBuf>> {
    let nodes: Vec<Vec<String>> = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])
        .collect();
    let tris: Vec<Vec<String>> = mesh
        .triangles
        .iter()
        .map(|t| t.iter().map(|v| v.to_string()).collect())
        .collect();
    let bnd: Vec<Vec<String>> = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            vec![
                e.nodes[0].to_string(),
                e.nodes[1].to_string(),
                e.tag.to_string(),
            ]
        })
        .collect();
    let paths = vec![
        dir.join("nodes.csv"),
        dir.join("tris.csv"),
        dir.join("bnd.csv"),
    ];
    write_table(&paths[0], &["index", "r", "y"], &nodes)?;
    write_table(&paths[1], &["n0", "n1", "n2"], &tris)?;
    write_table(&paths[2], &["n0", "n1", "tag"], &bnd)?;
    Ok(paths)
}

/// Coordinate-format dump, one `row col value` triple per line.
pub fn write_operator_coo(path: &Path, matrix: &CsrMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "% {} {} {}",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.nnz()
    )?;
    for (i, j, v) in matrix.iter() {
        writeln!(out, "{i} {j} {}", fmt_f64(v))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| SloshError::Parse(format!("cannot serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Re-reads a CSV file and checks its header and row widths; returns the row count.
///
/// Columns named in `numeric` must parse as finite numbers (empty cells are allowed).
pub fn check_csv(path: &Path, header: &[&str], numeric: &[&str]) -> Result<usize> {
    let mut reader = csv::Reader::from_path(path)?;
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(SloshError::Parse(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            found,
            header
        )));
    }
    let numeric_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| numeric.contains(h))
        .map(|(i, _)| i)
        .collect();
    let mut count = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &numeric_cols {
            let cell = &record[c];
            if !cell.is_empty() && !cell.parse::<f64>().is_ok_and(f64::is_finite) {
                return Err(SloshError::Parse(format!(
                    "{}: row {}: column {} holds '{}'",
                    path.display(),
                    line + 1,
                    header[c],
                    cell
                )));
            }
        }
        count += 1;
    }
    Ok(count)
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(SloshError::InvalidField(format!(
            "{what} has {got} values, expected {want}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::eigensolver::solve;
    use crate::geometry::make_cylinder;
    use crate::mesh::{generate, GradingSpec};
    use std::sync::Arc;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("slosh-io-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1.7976931348623157e308, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn tables_pass_their_own_schema_check() {
        let dir = scratch("tables");
        let mesh =
            Arc::new(generate(&make_cylinder(1.0).unwrap(), &GradingSpec::new(4, 4)).unwrap());
        let sol = solve(assemble(mesh.clone(), 1, ProblemKind::Sloshing).unwrap(), 3).unwrap();
        let rows = eigen_rows("cylinder:h=1", &sol);
        let eig = dir.join("eig.csv");
        write_eigen_csv(&eig, &rows).unwrap();
        assert_eq!(
            check_csv(&eig, &EIGEN_HEADER, &["m", "k", "nu", "gap", "residual"]).unwrap(),
            3
        );
        let text = std::fs::read_to_string(&eig).unwrap();
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("cylinder:h=1,1,sloshing,1,"));

        let field = dir.join("field.csv");
        write_field_csv(&field, &mesh, &sol.fields[0]).unwrap();
        assert_eq!(
            check_csv(&field, &FIELD_HEADER, &FIELD_HEADER).unwrap(),
            mesh.n_nodes()
        );
        let grad = dir.join("grad.csv");
        write_gradient_csv(&grad, &mesh, &sol.fields[0]).unwrap();
        assert_eq!(
            check_csv(&grad, &GRADIENT_HEADER, &GRADIENT_HEADER).unwrap(),
            mesh.triangles.len()
        );
        assert!(check_csv(&grad, &FIELD_HEADER, &[]).is_err());
        assert!(write_field_csv(&field, &mesh, &[1.0]).is_err());

        let paths = write_mesh(&dir, &mesh).unwrap();
        assert_eq!(
            check_csv(&paths[0], &["index", "r", "y"], &["r", "y"]).unwrap(),
            mesh.n_nodes()
        );
        assert_eq!(
            check_csv(&paths[2], &["n0", "n1", "tag"], &[]).unwrap(),
            mesh.boundary_edges.len()
        );

        let coo = dir.join("a.coo");
        write_operator_coo(&coo, sol.problem().a()).unwrap();
        let lines = std::fs::read_to_string(&coo).unwrap();
        assert_eq!(lines.lines().count(), 1 + sol.problem().a().nnz());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
