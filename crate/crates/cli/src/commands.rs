//! Subcommand drivers. Every command computes first and writes afterwards, so
//! invalid input or a failed solve leaves the output directory untouched.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::svg;
use rayon::prelude::*;
use serde::Serialize;
use slosh_core::analysis::{
    conjecture_probe, continuity_experiment, highspot, monotonicity_report, solve_mode,
    spectrum_report, stream_function, CheckRecord, VerificationReport,
};
use slosh_core::geometry::{make_cylinder, make_troesch, DomainSpec};
use slosh_core::io::{self, fmt_f64};
use slosh_core::mesh::{generate, validate};
use slosh_core::oracles::{bessel_zeros, cylinder_spectrum};
use slosh_core::{EigenSolution, ProblemKind};
use std::fs;
use std::path::{Path, PathBuf};

const CONTOUR_LEVELS: usize = 10;

/// A file to be written once all computation has succeeded.
enum Artifact {
    Csv {
        path: PathBuf,
        header: Vec<String>,
        numeric: Vec<String>,
        records: Vec<Vec<String>>,
    },
    Json {
        path: PathBuf,
        value: serde_json::Value,
        required: Vec<&'static str>,
    },
    Text {
        path: PathBuf,
        body: String,
    },
}

impl Artifact {
    fn csv(
        path: PathBuf,
        header: &[&str],
        numeric: &[&str],
        records: Vec<Vec<String>>,
    ) -> Artifact {
        Artifact::Csv {
            path,
            header: header.iter().map(|s| s.to_string()).collect(),
            numeric: numeric.iter().map(|s| s.to_string()).collect(),
            records,
        }
    }

    fn json<T: Serialize>(
        path: PathBuf,
        value: &T,
        required: &[&'static str],
    ) -> CliResult<Artifact> {
        let value = serde_json::to_value(value).map_err(|e| CliError::Schema(e.to_string()))?;
        Ok(Artifact::Json {
            path,
            value,
            required: required.to_vec(),
        })
    }
}

fn field_records(sol: &EigenSolution, k: usize) -> Vec<Vec<String>> {
    sol.problem()
        .mesh()
        .nodes
        .iter()
        .zip(&sol.fields[k])
        .map(|(p, &v)| vec![fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(v)])
        .collect()
}

/// Writes every artifact, then re-reads and validates each one.
fn commit(dir: &Path, artifacts: &[Artifact]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(slosh_core::SloshError::from)?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = match a {
            Artifact::Csv {
                path,
                header,
                records,
                ..
            } => {
                if let Some(parent) = path.parent() {
                    fs::create_dir_all(parent).map_err(slosh_core::SloshError::from)?;
                }
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                io::write_table(path, &header, records)?;
                path
            }
            Artifact::Json { path, value, .. } => {
                io::write_json(path, value)?;
                path
            }
            Artifact::Text { path, body } => {
                fs::write(path, body).map_err(slosh_core::SloshError::from)?;
                path
            }
        };
        written.push(path.clone());
    }
    for a in artifacts {
        match a {
            Artifact::Csv {
                path,
                header,
                numeric,
                records,
            } => {
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let numeric: Vec<&str> = numeric.iter().map(String::as_str).collect();
                let rows = io::check_csv(path, &header, &numeric)
                    .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
                if rows != records.len() {
                    return Err(CliError::Schema(format!(
                        "{}: {rows} rows, expected {}",
                        path.display(),
                        records.len()
                    )));
                }
            }
            Artifact::Json { path, required, .. } => check_json(path, required)?,
            Artifact::Text { path, body } => {
                let back = fs::read_to_string(path).map_err(slosh_core::SloshError::from)?;
                if &back != body || !back.trim_end().ends_with("</svg>") {
                    return Err(CliError::Schema(format!(
                        "{}: not a complete SVG document",
                        path.display()
                    )));
                }
            }
        }
    }
    Ok(written)
}

/// Parses the file back; arrays must hold objects carrying every required key.
fn check_json(path: &Path, required: &[&str]) -> CliResult<()> {
    let text = fs::read_to_string(path).map_err(slosh_core::SloshError::from)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let objects: Vec<&serde_json::Value> = match &value {
        serde_json::Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    for obj in objects {
        for key in required {
            if obj.get(key).is_none() {
                return Err(CliError::Schema(format!(
                    "{}: missing key '{key}'",
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        log::info!("wrote {}", p.display());
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> CliResult<()> {
    let solutions: Vec<EigenSolution> = cfg
        .m
        .par_iter()
        .map(|&m| solve_mode(&cfg.meridian, &cfg.mesh, m, cfg.kind, cfg.k))
        .collect::<slosh_core::Result<_>>()?;

    let mut rows = Vec::new();
    for sol in &solutions {
        rows.extend(io::eigen_rows(&cfg.domain, sol));
    }
    let eigen_records: Vec<Vec<String>> = rows.iter().map(io::EigenRow::record).collect();

    let mut artifacts = vec![
        Artifact::csv(
            cfg.out.join("eigenvalues.csv"),
            &io::EIGEN_HEADER,
            &["m", "k", "nu", "residual"],
            eigen_records,
        ),
        Artifact::json(cfg.out.join("config.json"), cfg, &["domain", "mesh"])?,
    ];
    for sol in &solutions {
        for k in 0..sol.len() {
            let path =
                cfg.out
                    .join("fields")
                    .join(format!("m{}_k{}.csv", sol.problem().m(), k + 1));
            artifacts.push(Artifact::csv(
                path,
                &io::FIELD_HEADER,
                &io::FIELD_HEADER,
                field_records(sol, k),
            ));
        }
    }
    if cfg.svg {
        let fundamental = match solutions
            .iter()
            .find(|s| s.problem().m() == 1 && s.problem().kind() == ProblemKind::Sloshing)
        {
            Some(s) => s.clone(),
            None => solve_mode(&cfg.meridian, &cfg.mesh, 1, ProblemKind::Sloshing, 1)?,
        };
        artifacts.push(Artifact::Text {
            path: cfg.out.join("psi11.svg"),
            body: svg::contours(
                fundamental.problem().mesh(),
                &fundamental.fields[0],
                CONTOUR_LEVELS,
            ),
        });
    }

    for r in &rows {
        println!(
            "{} m={} {} k={} nu={:.10}",
            r.domain, r.m, r.kind, r.k, r.nu
        );
    }
    report_written(&commit(&cfg.out, &artifacts)?);
    Ok(())
}

fn mesh_params(cfg: &RunConfig, record: CheckRecord) -> CheckRecord {
    record
        .with_param("nr", cfg.mesh.nr as f64)
        .with_param("ny", cfg.mesh.ny as f64)
        .with_param("corner_ratio", cfg.mesh.corner_ratio)
}

/// Runs the named checks; the caller decides what a failure means.
pub fn run_checks(cfg: &RunConfig) -> CliResult<VerificationReport> {
    let want = |name: &str| cfg.checks.iter().any(|c| c == name);
    let tol = cfg.tolerances;
    let domain = cfg.meridian.name().to_string();
    let mut report = VerificationReport::default();

    if want("ordering") {
        let spectrum = spectrum_report(&cfg.meridian, &cfg.mesh, 2, 2)?;
        // ν₁ = ν₁,₁ is only proved for convex domains; elsewhere the margins are informational
        let exploratory = !cfg.meridian.convex();
        for c in &spectrum.checks {
            let ratio = c.margin / c.error_estimate;
            let pass = exploratory || c.margin > tol.margin_factor * c.error_estimate;
            let record = CheckRecord::new(
                &format!("ordering:{}", c.name),
                &domain,
                ratio,
                tol.margin_factor,
                pass,
            )
            .with_param("lower", c.lower)
            .with_param("upper", c.upper)
            .with_param("margin", c.margin)
            .with_param("error_estimate", c.error_estimate)
            .with_param("exploratory", f64::from(u8::from(exploratory)));
            report.push(mesh_params(cfg, record));
        }
    }

    let needs_fundamental = [
        "monotonicity",
        "highspot-interior",
        "highspot-rim",
        "contact-slope",
    ]
    .iter()
    .any(|c| want(c));
    if needs_fundamental {
        let sol = solve_mode(&cfg.meridian, &cfg.mesh, 1, ProblemKind::Sloshing, 1)?;
        let spot = highspot(&sol)?;
        if want("monotonicity") {
            let mono = monotonicity_report(&sol, tol.monotonicity)?;
            let record = CheckRecord::new(
                "monotonicity",
                &domain,
                mono.violation_fraction,
                0.0,
                mono.violation_fraction == 0.0,
            )
            .with_param("tol", tol.monotonicity)
            .with_param("min_dpsi_dr", mono.min_dpsi_dr)
            .with_param("min_dpsi_dy", mono.min_dpsi_dy);
            report.push(mesh_params(cfg, record));
        }
        let margin = slosh_core::analysis::HIGHSPOT_MARGIN_CELLS as f64;
        let cells = spot.cells_from_corner as f64;
        if want("highspot-interior") {
            let record =
                CheckRecord::new("highspot-interior", &domain, cells, margin, spot.interior)
                    .with_param("argmax_r", spot.argmax_r)
                    .with_param("sign_change", f64::from(u8::from(spot.sign_change)));
            report.push(mesh_params(cfg, record));
        }
        if want("highspot-rim") {
            let record = CheckRecord::new("highspot-rim", &domain, cells, margin, !spot.interior)
                .with_param("argmax_r", spot.argmax_r);
            report.push(mesh_params(cfg, record));
        }
        if want("contact-slope") {
            // for right angles the predicted slope vanishes; measure against ν instead
            let scale = spot.expected_slope.abs().max(spot.nu);
            let err = (spot.contact_slope_fit - spot.expected_slope).abs() / scale;
            let record = CheckRecord::new(
                "contact-slope",
                &domain,
                err,
                tol.contact_slope,
                err <= tol.contact_slope,
            )
            .with_param("fit", spot.contact_slope_fit)
            .with_param("expected", spot.expected_slope)
            .with_param("nu11", spot.nu);
            report.push(mesh_params(cfg, record));
        }
    }

    if want("stream-sign") {
        let (sloshing, ds) = rayon::join(
            || solve_mode(&cfg.meridian, &cfg.mesh, 0, ProblemKind::Sloshing, 1),
            || {
                solve_mode(
                    &cfg.meridian,
                    &cfg.mesh,
                    0,
                    ProblemKind::DirichletSteklov,
                    1,
                )
            },
        );
        let (sloshing, ds) = (sloshing?, ds?);
        let (nu01, nu01_ds) = (sloshing.eigenvalues[0], ds.eigenvalues[0]);
        let stream = stream_function(&sloshing, 0)?;
        // the sign property is only claimed when ν₀,₁ < ν̃₀,₁
        let asserted = nu01 < nu01_ds;
        let one_signed = stream.sign_violation <= tol.stream_sign;
        let record = CheckRecord::new(
            "stream-sign",
            &domain,
            stream.sign_violation,
            tol.stream_sign,
            !asserted || one_signed,
        )
        .with_param("nu01", nu01)
        .with_param("nu01_ds", nu01_ds)
        .with_param("boundary_residual", stream.boundary_residual)
        .with_param("exploratory", f64::from(u8::from(!asserted)));
        report.push(mesh_params(cfg, record));
    }

    if want("surface-mean") {
        let sol = solve_mode(&cfg.meridian, &cfg.mesh, 0, ProblemKind::Sloshing, cfg.k)?;
        let worst = sol
            .fields
            .iter()
            .map(|f| sol.problem().mf().matvec(f).iter().sum::<f64>().abs())
            .fold(0.0, f64::max);
        let record = CheckRecord::new(
            "surface-mean",
            &domain,
            worst,
            tol.surface_mean,
            worst <= tol.surface_mean,
        )
        .with_param("fields", sol.len() as f64);
        report.push(mesh_params(cfg, record));
    }
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<()> {
    if cfg.checks.is_empty() {
        return Err(CliError::Invalid("no checks requested".into()));
    }
    let report = run_checks(cfg)?;
    let artifacts = [Artifact::json(
        cfg.out.join("report.json"),
        &report.records,
        &["check", "domain", "params", "value", "threshold", "pass"],
    )?];
    report_written(&commit(&cfg.out, &artifacts)?);
    for r in &report.records {
        println!(
            "[{}] {} on {}: value {:.4e}, threshold {:.4e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check,
            r.domain,
            r.value,
            r.threshold
        );
    }
    let failures: Vec<&CheckRecord> = report.failures().collect();
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("failed: {}", serde_json::to_string(f).unwrap_or_default());
    }
    Err(CliError::ChecksFailed(failures.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Depth,
    Lambda,
    Deform,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Axis> {
        match s {
            "h" => Ok(Axis::Depth),
            "lambda" => Ok(Axis::Lambda),
            "s" => Ok(Axis::Deform),
            _ => Err(CliError::Invalid(format!(
                "sweep axis must be 'h', 'lambda' or 's', got '{s}'"
            ))),
        }
    }
}

/// Checks the sweep values before any solve.
pub fn validate_sweep(cfg: &RunConfig, axis: Axis, values: &[f64]) -> CliResult<()> {
    if values.is_empty() {
        return Err(CliError::Invalid("sweep needs at least one value".into()));
    }
    let invalid = |e: slosh_core::SloshError| CliError::Invalid(e.to_string());
    for &v in values {
        match axis {
            Axis::Depth => drop(make_cylinder(v).map_err(invalid)?),
            Axis::Lambda => drop(make_troesch(v).map_err(invalid)?),
            Axis::Deform if !(0.0..=1.0).contains(&v) => {
                return Err(CliError::Invalid(format!(
                    "deformation parameter must lie in [0, 1], got {v}"
                )))
            }
            Axis::Deform => {}
        }
    }
    if axis == Axis::Deform {
        slosh_core::geometry::check_class(&cfg.meridian, &cfg.class_params()?).map_err(invalid)?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, axis: Axis, values: &[f64]) -> CliResult<()> {
    validate_sweep(cfg, axis, values)?;
    let path = cfg.out.join("sweep.csv");
    let artifact = match axis {
        Axis::Depth => {
            let rows = values
                .par_iter()
                .map(|&h| -> slosh_core::Result<Vec<String>> {
                    let d = make_cylinder(h)?;
                    let nu11 =
                        solve_mode(&d, &cfg.mesh, 1, ProblemKind::Sloshing, 1)?.eigenvalues[0];
                    let nu01 =
                        solve_mode(&d, &cfg.mesh, 0, ProblemKind::Sloshing, 1)?.eigenvalues[0];
                    let ds = solve_mode(&d, &cfg.mesh, 0, ProblemKind::DirichletSteklov, 1)?
                        .eigenvalues[0];
                    let exact = cylinder_spectrum(h)?.nu11;
                    Ok(vec![
                        fmt_f64(h),
                        fmt_f64(nu11),
                        fmt_f64(exact),
                        fmt_f64(nu01),
                        fmt_f64(ds),
                    ])
                })
                .collect::<slosh_core::Result<Vec<_>>>()?;
            let header = ["h", "nu11", "nu11_exact", "nu01", "nu01_ds"];
            Artifact::csv(path, &header, &header, rows)
        }
        Axis::Lambda => {
            let rows = values
                .par_iter()
                .map(|&l| -> slosh_core::Result<Vec<String>> {
                    let r = conjecture_probe(l, &cfg.mesh)?;
                    Ok(vec![
                        fmt_f64(r.lambda),
                        r.index.to_string(),
                        fmt_f64(r.located),
                        fmt_f64(r.relative_error),
                        fmt_f64(r.nu01),
                        fmt_f64(r.nu01_ds),
                    ])
                })
                .collect::<slosh_core::Result<Vec<_>>>()?;
            let header = [
                "lambda",
                "index",
                "nu_located",
                "relative_error",
                "nu01",
                "nu01_ds",
            ];
            Artifact::csv(path, &header, &header, rows)
        }
        Axis::Deform => {
            let table =
                continuity_experiment(&cfg.meridian, values, &cfg.class_params()?, &cfg.mesh)?;
            let rows = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.s),
                        fmt_f64(r.distance),
                        fmt_f64(r.nu11),
                        fmt_f64(r.delta_nu),
                        fmt_f64(table.fitted_slope),
                        fmt_f64(table.constant),
                    ]
                })
                .collect();
            println!(
                "fitted exponent {:.4}, C = {:.4}",
                table.fitted_slope, table.constant
            );
            let header = [
                "s",
                "distance",
                "nu11",
                "delta_nu",
                "fitted_slope",
                "constant",
            ];
            Artifact::csv(path, &header, &["s", "distance", "nu11", "delta_nu"], rows)
        }
    };
    if let Artifact::Csv {
        header, records, ..
    } = &artifact
    {
        println!("{}", header.join(","));
        for r in records {
            println!("{}", r.join(","));
        }
    }
    report_written(&commit(&cfg.out, &[artifact])?);
    Ok(())
}

pub fn cmd_mesh_dump(cfg: &RunConfig) -> CliResult<()> {
    let mesh = generate(&cfg.meridian, &cfg.mesh)?;
    let check = validate(&mesh);
    if let Some(v) = check.first_violation() {
        return Err(CliError::Solver(slosh_core::SloshError::Meshing(format!(
            "{v:?}"
        ))));
    }
    let nodes = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])
        .collect();
    let tris = mesh
        .triangles
        .iter()
        .map(|t| t.iter().map(|v| v.to_string()).collect())
        .collect();
    let bnd = mesh
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
    let mut artifacts = vec![
        Artifact::csv(
            cfg.out.join("nodes.csv"),
            &["index", "r", "y"],
            &["index", "r", "y"],
            nodes,
        ),
        Artifact::csv(
            cfg.out.join("tris.csv"),
            &["n0", "n1", "n2"],
            &["n0", "n1", "n2"],
            tris,
        ),
        Artifact::csv(
            cfg.out.join("bnd.csv"),
            &["n0", "n1", "tag"],
            &["n0", "n1"],
            bnd,
        ),
        Artifact::json(
            cfg.out.join("mesh_report.json"),
            &check,
            &["violations", "min_angle_deg"],
        )?,
    ];
    if cfg.svg {
        artifacts.push(Artifact::Text {
            path: cfg.out.join("mesh.svg"),
            body: svg::wireframe(&mesh),
        });
    }
    println!(
        "{}: {} nodes, {} triangles, min angle {:.2} deg",
        cfg.meridian.name(),
        mesh.n_nodes(),
        mesh.triangles.len(),
        check.min_angle_deg
    );
    report_written(&commit(&cfg.out, &artifacts)?);
    Ok(())
}

#[derive(Debug, Serialize)]
struct OracleReport {
    domain: String,
    j01: f64,
    j11_prime: f64,
    /// Closed-form eigenvalues available for this domain, by name.
    values: std::collections::BTreeMap<String, f64>,
}

pub fn cmd_oracle(cfg: &RunConfig, write: bool) -> CliResult<()> {
    let table = bessel_zeros()?;
    let mut values = std::collections::BTreeMap::new();
    match cfg
        .domain
        .parse::<DomainSpec>()
        .map_err(|e| CliError::Invalid(e.to_string()))?
    {
        DomainSpec::Cylinder { h } => {
            let c = cylinder_spectrum(h)?;
            values.insert("nu11".to_string(), c.nu11);
            values.insert("nu01_ds".to_string(), c.nu01_ds);
        }
        DomainSpec::Troesch { lambda } => {
            values.insert("nu_troesch".to_string(), lambda);
            values.insert("bottom_depth".to_string(), -cfg.meridian.y0());
        }
        _ => {}
    }
    let report = OracleReport {
        domain: cfg.domain.clone(),
        j01: table.j01,
        j11_prime: table.j11p,
        values,
    };
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Schema(e.to_string()))?;
    println!("{text}");
    if write {
        let artifact = Artifact::json(
            cfg.out.join("oracle.json"),
            &report,
            &["domain", "j01", "j11_prime", "values"],
        )?;
        report_written(&commit(&cfg.out, &[artifact])?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names() {
        assert_eq!("h".parse::<Axis>().unwrap(), Axis::Depth);
        assert_eq!("s".parse::<Axis>().unwrap(), Axis::Deform);
        assert!(matches!("depth".parse::<Axis>(), Err(CliError::Invalid(_))));
    }

    #[test]
    fn json_schema_check_flags_missing_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        fs::write(&path, r#"[{"check": "a", "pass": true}]"#).unwrap();
        assert!(check_json(&path, &["check", "pass"]).is_ok());
        assert!(matches!(
            check_json(&path, &["value"]),
            Err(CliError::Schema(_))
        ));
    }
}
