//! Theorem-level experiments on computed eigenpairs.

use crate::assembly::{assemble, ModeProblem, ProblemKind};
use crate::eigensolver::{solve, solve_all, surface_trace, EigenSolution};
use crate::error::{Result, SloshError};
use crate::geometry::{
    deform, distance, make_troesch, star_rep, ClassParams, MeridianDomain, DEFAULT_ANGLES,
};
use crate::mesh::{generate, BoundaryTag, GradingSpec, Mesh};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Default relative tolerance of the monotonicity check.
pub const MONOTONICITY_TOL: f64 = 1e-3;
/// Ordering margins must exceed this multiple of the discretization-error estimate.
pub const MARGIN_FACTOR: f64 = 5.0;
/// Surface cells kept between the high spot and the corner for it to count as interior.
pub const HIGHSPOT_MARGIN_CELLS: usize = 2;
/// Surface cells used by the contact-slope fit.
pub const CONTACT_FIT_CELLS: usize = 5;
/// Relative size of the minority sign below which a stream function counts as one-signed.
pub const STREAM_SIGN_TOL: f64 = 1e-6;

/// One record of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub domain: String,
    pub params: BTreeMap<String, f64>,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: &str, domain: &str, value: f64, threshold: f64, pass: bool) -> Self {
        CheckRecord {
            check: check.to_string(),
            domain: domain.to_string(),
            params: BTreeMap::new(),
            value,
            threshold,
            pass,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Meshes `domain` and solves the first `k` eigenpairs of one mode.
pub fn solve_mode(
    domain: &MeridianDomain,
    spec: &GradingSpec,
    m: u32,
    kind: ProblemKind,
    k: usize,
) -> Result<EigenSolution> {
    let mesh = Arc::new(generate(domain, spec)?);
    solve(assemble(mesh, m, kind)?, k)
}

/// The mesh spec with both cell counts halved, used for error estimates.
pub fn coarsened(spec: &GradingSpec) -> GradingSpec {
    GradingSpec {
        nr: (spec.nr / 2).max(2),
        ny: (spec.ny / 2).max(2),
        ..*spec
    }
}

/// Constant P1 gradient `(∂ψ/∂r, ∂ψ/∂y)` on every triangle.
pub fn triangle_gradients(mesh: &Mesh, field: &[f64]) -> Vec<[f64; 2]> {
    mesh.triangles
        .iter()
        .map(|tri| {
            let p = tri.map(|v| mesh.nodes[v]);
            let f = tri.map(|v| field[v]);
            let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let mut g = [0.0; 2];
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                g[0] += f[i] * (p[j][1] - p[k][1]) / area2;
                g[1] += f[i] * (p[k][0] - p[j][0]) / area2;
            }
            g
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Smallest `∂ψ/∂r`, relative to `max |∇ψ|`.
    pub min_dpsi_dr: f64,
    /// Smallest `∂ψ/∂y`, relative to `max |∇ψ|`.
    pub min_dpsi_dy: f64,
    pub violation_fraction: f64,
    pub tol: f64,
    /// Triangle with the most negative relative derivative, if any violates.
    pub worst_triangle: Option<usize>,
}

/// Per-triangle sign check of both derivatives of the fundamental field.
pub fn monotonicity_report(sol: &EigenSolution, tol: f64) -> Result<MonotonicityReport> {
    let field = sol
        .fields
        .first()
        .ok_or_else(|| SloshError::InvalidField("solution has no fields".into()))?;
    let mesh = sol.problem().mesh();
    let grads = triangle_gradients(mesh, field);
    let scale = grads.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(SloshError::InvalidField("field has zero gradient".into()));
    }
    let mut min_r = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut violations = 0usize;
    let mut worst: Option<(usize, f64)> = None;
    for (t, g) in grads.iter().enumerate() {
        let (gr, gy) = (g[0] / scale, g[1] / scale);
        min_r = min_r.min(gr);
        min_y = min_y.min(gy);
        let low = gr.min(gy);
        if low < -tol {
            violations += 1;
            if worst.is_none_or(|(_, w)| low < w) {
                worst = Some((t, low));
            }
        }
    }
    Ok(MonotonicityReport {
        min_dpsi_dr: min_r,
        min_dpsi_dy: min_y,
        violation_fraction: violations as f64 / grads.len() as f64,
        tol,
        worst_triangle: worst.map(|(t, _)| t),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HighSpotReport {
    pub argmax_r: f64,
    /// Number of surface cells between the high spot and the corner.
    pub cells_from_corner: usize,
    pub interior: bool,
    pub sign_change: bool,
    /// Least-squares slope of `ψ(r, 0)/ψ(r0, 0)` against `r0 − r` near the corner.
    pub contact_slope_fit: f64,
    /// The corner-expansion prediction `−ν cot θ0`.
    pub expected_slope: f64,
    pub nu: f64,
}

/// Locates the maximum of the fundamental field on the free surface.
pub fn highspot(sol: &EigenSolution) -> Result<HighSpotReport> {
    if sol.is_empty() {
        return Err(SloshError::InvalidField("solution has no fields".into()));
    }
    let trace = surface_trace(sol, 0);
    let peak = trace.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(SloshError::InvalidField("surface trace vanishes".into()));
    }
    let last = trace.len() - 1;
    let (imax, &(argmax_r, _)) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let cells_from_corner = last - imax;
    let eps = 1e-10 * peak;
    let steps: Vec<f64> = trace.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let sign_change = steps.iter().any(|&d| d > eps) && steps.iter().any(|&d| d < -eps);

    let (r0, psi0) = trace[last];
    let cells = CONTACT_FIT_CELLS.min(last);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    if psi0.abs() > 0.0 {
        for &(r, v) in &trace[last - cells..last] {
            let x = r0 - r;
            sxx += x * x;
            sxy += x * (v / psi0 - 1.0);
        }
    }
    let contact_slope_fit = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let nu = sol.eigenvalues[0];
    let theta0 = sol.problem().mesh().domain().contact_angle();
    Ok(HighSpotReport {
        argmax_r,
        cells_from_corner,
        interior: cells_from_corner >= HIGHSPOT_MARGIN_CELLS,
        sign_change,
        contact_slope_fit,
        expected_slope: -nu / theta0.tan(),
        nu,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamField {
    /// Nodal Stokes stream function values.
    pub values: Vec<f64>,
    /// `max |Ψ|` over Bottom nodes.
    pub boundary_residual: f64,
    pub max_abs: f64,
    /// Smaller of the largest positive and largest negative interior value, over `max_abs`.
    pub sign_violation: f64,
    /// `sign_violation ≤ STREAM_SIGN_TOL`.
    pub sign_constant: bool,
}

/// Nodal gradients recovered by a least-squares quadratic fit over each
/// node's two-ring patch.
///
/// The fit is done in patch coordinates scaled separately in `r` and `y`, so
/// thin layers near a flat apex do not spoil it the way averaging the
/// element gradients does.
pub fn recovered_gradient(mesh: &Mesh, field: &[f64]) -> Vec<[f64; 2]> {
    let n = mesh.n_nodes();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for tri in &mesh.triangles {
        for &a in tri {
            for &b in tri {
                if a != b {
                    neighbours[a].push(b);
                }
            }
        }
    }
    for list in &mut neighbours {
        list.sort_unstable();
        list.dedup();
    }
    let fallback = averaged_gradient(mesh, field);
    (0..n)
        .into_par_iter()
        .map(|v| {
            let mut patch: Vec<usize> = neighbours[v]
                .iter()
                .flat_map(|&w| neighbours[w].iter().copied())
                .chain(std::iter::once(v))
                .collect();
            patch.sort_unstable();
            patch.dedup();
            let [rv, yv] = mesh.nodes[v];
            let scale = |k: usize, c: f64| {
                patch
                    .iter()
                    .map(|&w| (mesh.nodes[w][k] - c).abs())
                    .fold(0.0, f64::max)
            };
            let (sr, sy) = (scale(0, rv), scale(1, yv));
            if !(sr > 0.0 && sy > 0.0) {
                return fallback[v];
            }
            let rows: Vec<([f64; 6], f64)> = patch
                .iter()
                .map(|&w| {
                    let x = (mesh.nodes[w][0] - rv) / sr;
                    let z = (mesh.nodes[w][1] - yv) / sy;
                    ([1.0, x, z, x * x, x * z, z * z], field[w])
                })
                .collect();
            for cols in [6, 3] {
                if let Some(c) = least_squares(&rows, cols) {
                    return [c[1] / sr, c[2] / sy];
                }
            }
            fallback[v]
        })
        .collect()
}

/// Householder least squares on the first `cols` columns; `None` when the
/// columns are numerically dependent.
fn least_squares(rows: &[([f64; 6], f64)], cols: usize) -> Option<Vec<f64>> {
    let m = rows.len();
    if m < cols {
        return None;
    }
    let mut a: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r[..cols].to_vec()).collect();
    let mut b: Vec<f64> = rows.iter().map(|(_, f)| *f).collect();
    let col_norm0: Vec<f64> = (0..cols)
        .map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    for k in 0..cols {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if !(norm > 1e-10 * col_norm0[k]) {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut u: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        u[0] -= alpha;
        let uu: f64 = u.iter().map(|x| x * x).sum();
        for j in k..cols {
            let d: f64 = (k..m).map(|i| u[i - k] * a[i][j]).sum::<f64>() * 2.0 / uu;
            for i in k..m {
                a[i][j] -= d * u[i - k];
            }
        }
        let d: f64 = (k..m).map(|i| u[i - k] * b[i]).sum::<f64>() * 2.0 / uu;
        for i in k..m {
            b[i] -= d * u[i - k];
        }
    }
    let mut c = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = (k + 1..cols).map(|j| a[k][j] * c[j]).sum();
        c[k] = (b[k] - s) / a[k][k];
    }
    Some(c)
}

/// Area-weighted average of the adjacent element gradients.
pub fn averaged_gradient(mesh: &Mesh, field: &[f64]) -> Vec<[f64; 2]> {
    let grads = triangle_gradients(mesh, field);
    let mut acc = vec![[0.0; 2]; mesh.n_nodes()];
    let mut weight = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t);
        for &v in tri {
            acc[v][0] += area * grads[t][0];
            acc[v][1] += area * grads[t][1];
            weight[v] += area;
        }
    }
    acc.iter()
        .zip(&weight)
        .map(|(a, &w)| {
            if w > 0.0 {
                [a[0] / w, a[1] / w]
            } else {
                [0.0; 2]
            }
        })
        .collect()
}

/// Stokes stream function of an axisymmetric field by row-wise integration
/// of `Ψ_r = r ψ_y` from the axis.
///
/// Nodal `ψ_y` comes from [`averaged_gradient`]; on the free surface the
/// Steklov condition `ψ_y = νψ` replaces it.
pub fn stream_function(sol: &EigenSolution, k: usize) -> Result<StreamField> {
    let problem = sol.problem();
    if problem.m() != 0 {
        return Err(SloshError::InvalidField(format!(
            "stream functions need an axisymmetric field, got m = {}",
            problem.m()
        )));
    }
    let field = sol
        .fields
        .get(k)
        .ok_or_else(|| SloshError::InvalidField(format!("no field with index {k}")))?;
    let mesh = problem.mesh();
    stream_of_field(mesh, field, sol.eigenvalues[k], Recovery::ElementAverage)
}

/// How nodal derivatives are recovered from a P1 field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recovery {
    /// [`averaged_gradient`]; suited to Galerkin solutions, whose element
    /// gradients are best approximations even on sheared cells.
    ElementAverage,
    /// [`recovered_gradient`]; suited to interpolants of smooth fields.
    PatchQuadratic,
}

/// Stream function of any nodal axisymmetric field with Steklov parameter `nu`.
pub fn stream_of_field(
    mesh: &Mesh,
    field: &[f64],
    nu: f64,
    recovery: Recovery,
) -> Result<StreamField> {
    let rows = mesh
        .rows()
        .ok_or_else(|| SloshError::UnsupportedMesh("mesh has no rows of constant y".into()))?;
    if field.len() != mesh.n_nodes() {
        return Err(SloshError::InvalidField(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.n_nodes()
        )));
    }
    let grads = match recovery {
        Recovery::ElementAverage => averaged_gradient(mesh, field),
        Recovery::PatchQuadratic => recovered_gradient(mesh, field),
    };
    let mut dy: Vec<f64> = grads.iter().map(|g| g[1]).collect();
    for v in mesh.tagged_nodes(BoundaryTag::FreeSurface) {
        dy[v] = nu * field[v];
    }
    stream_from_rows(mesh, rows, &dy)
}

/// Row integration of `Ψ_r = r·dy` given nodal `dy`.
pub fn stream_from_rows(mesh: &Mesh, rows: &[Vec<usize>], dy: &[f64]) -> Result<StreamField> {
    let mut values = vec![0.0; mesh.n_nodes()];
    for row in rows {
        let mut psi = 0.0;
        values[row[0]] = 0.0;
        for w in row.windows(2) {
            let (a, b) = (mesh.nodes[w[0]], mesh.nodes[w[1]]);
            psi += 0.5 * (b[0] - a[0]) * (a[0] * dy[w[0]] + b[0] * dy[w[1]]);
            values[w[1]] = psi;
        }
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let boundary_residual = mesh
        .tagged_nodes(BoundaryTag::Bottom)
        .iter()
        .fold(0.0f64, |m, &v| m.max(values[v].abs()));
    let mut on_boundary = vec![false; mesh.n_nodes()];
    for e in &mesh.boundary_edges {
        on_boundary[e.nodes[0]] = true;
        on_boundary[e.nodes[1]] = true;
    }
    let interior = || (0..mesh.n_nodes()).filter(|&v| !on_boundary[v]);
    let positive = interior().map(|v| values[v]).fold(0.0f64, f64::max);
    let negative = interior().map(|v| -values[v]).fold(0.0f64, f64::max);
    let sign_violation = if max_abs > 0.0 {
        positive.min(negative) / max_abs
    } else {
        0.0
    };
    Ok(StreamField {
        values,
        boundary_residual,
        max_abs,
        sign_violation,
        sign_constant: sign_violation <= STREAM_SIGN_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub name: String,
    /// `ν₁,₁`.
    pub lower: f64,
    pub upper: f64,
    pub margin: f64,
    /// Sum of the refinement error estimates of both eigenvalues.
    pub error_estimate: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub domain: String,
    /// `values[m][k − 1]` on the fine mesh.
    pub values: Vec<Vec<f64>>,
    /// `|fine − coarse|` for each entry of `values`.
    pub error_estimates: Vec<Vec<f64>>,
    pub checks: Vec<OrderingCheck>,
    /// Each `ν_{m,k}` with `m ≥ 1` is a double eigenvalue of the 3D problem
    /// (the `cos mθ` and `sin mθ` copies).
    pub multiplicity_3d: Vec<usize>,
}

impl SpectrumReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Sloshing spectra for `m = 0..=m_max` on two refinement levels and the
/// orderings `ν₁,₁ < ν₀,₁`, `ν₁,₁ < ν₂,₁`, `ν₁,₁ < ν₁,₂` with error margins.
pub fn spectrum_report(
    domain: &MeridianDomain,
    spec: &GradingSpec,
    m_max: u32,
    k_max: usize,
) -> Result<SpectrumReport> {
    if m_max < 2 || k_max < 2 {
        return Err(SloshError::InvalidParameter(format!(
            "need m_max >= 2 and k_max >= 2, got {m_max} and {k_max}"
        )));
    }
    let coarse = coarsened(spec);
    let jobs: Vec<(u32, bool)> = (0..=m_max).flat_map(|m| [(m, true), (m, false)]).collect();
    let fine_mesh = Arc::new(generate(domain, spec)?);
    let coarse_mesh = Arc::new(generate(domain, &coarse)?);
    let solved: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(m, fine)| {
            let mesh = if fine { &fine_mesh } else { &coarse_mesh };
            let sol = solve(assemble(mesh.clone(), m, ProblemKind::Sloshing)?, k_max)?;
            Ok(sol.eigenvalues)
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut error_estimates = Vec::new();
    for m in 0..=m_max as usize {
        let (f, c) = (&solved[2 * m], &solved[2 * m + 1]);
        error_estimates.push(
            f.iter()
                .zip(c)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>(),
        );
        values.push(f.clone());
    }
    let nu11 = values[1][0];
    let e11 = error_estimates[1][0];
    let check = |name: &str, upper: f64, err: f64| {
        let margin = upper - nu11;
        let error_estimate = e11 + err;
        OrderingCheck {
            name: name.to_string(),
            lower: nu11,
            upper,
            margin,
            error_estimate,
            pass: margin > MARGIN_FACTOR * error_estimate,
        }
    };
    let checks = vec![
        check("nu11<nu01", values[0][0], error_estimates[0][0]),
        check("nu11<nu21", values[2][0], error_estimates[2][0]),
        check("nu11<nu12", values[1][1], error_estimates[1][1]),
    ];
    Ok(SpectrumReport {
        domain: domain.name().to_string(),
        values,
        error_estimates,
        checks,
        multiplicity_3d: (0..=m_max).map(|m| if m == 0 { 1 } else { 2 }).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DirichletSteklovFirst {
    pub nu: f64,
    pub constant_sign: bool,
    #[serde(skip)]
    pub solution: EigenSolution,
}

/// First axisymmetric Dirichlet–Steklov eigenpair and a sign check of its field.
pub fn dirichlet_steklov_first(
    domain: &MeridianDomain,
    spec: &GradingSpec,
) -> Result<DirichletSteklovFirst> {
    let solution = solve_mode(domain, spec, 0, ProblemKind::DirichletSteklov, 1)?;
    let field = &solution.fields[0];
    let peak = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let constant_sign =
        field.iter().all(|&v| v >= -1e-8 * peak) || field.iter().all(|&v| v <= 1e-8 * peak);
    Ok(DirichletSteklovFirst {
        nu: solution.eigenvalues[0],
        constant_sign,
        solution,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureRecord {
    pub lambda: f64,
    /// 1-based position of the eigenvalue closest to `λ` in the `m = 0` spectrum.
    pub index: usize,
    pub located: f64,
    pub relative_error: f64,
    pub nu01: f64,
    pub nu01_ds: f64,
    /// `λ = ν₀,₁`, the conjectured case.
    pub supports_conjecture: bool,
    /// The alternative of the Troesch corollary: `ν₀,₁ ≥ ν̃₀,₁`.
    pub ds_dominated: bool,
    /// Distance from `λ` to the nearest other eigenvalue, relative to `λ`.
    pub separation: f64,
}

/// Locates the Troesch eigenvalue `λ` in the axisymmetric sloshing spectrum of `W_λ`.
pub fn conjecture_probe(lambda: f64, spec: &GradingSpec) -> Result<ConjectureRecord> {
    let domain = make_troesch(lambda)?;
    let mesh = Arc::new(generate(&domain, spec)?);
    let (sloshing, ds) = rayon::join(
        || solve_all(assemble(mesh.clone(), 0, ProblemKind::Sloshing)?),
        || solve(assemble(mesh.clone(), 0, ProblemKind::DirichletSteklov)?, 1),
    );
    let (sloshing, ds) = (sloshing?, ds?);
    let (index, located) = closest(&sloshing.eigenvalues, lambda)
        .ok_or_else(|| SloshError::Numeric("empty spectrum".into()))?;
    let separation = sloshing
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, v)| (v - lambda).abs() / lambda)
        .fold(f64::INFINITY, f64::min);
    let nu01 = sloshing.eigenvalues[0];
    let nu01_ds = ds.eigenvalues[0];
    Ok(ConjectureRecord {
        lambda,
        index: index + 1,
        located,
        relative_error: (located - lambda).abs() / lambda,
        nu01,
        nu01_ds,
        supports_conjecture: index == 0,
        ds_dominated: nu01 >= nu01_ds,
        separation,
    })
}

/// Index and value of the entry closest to `target`.
pub fn closest(values: &[f64], target: f64) -> Option<(usize, f64)> {
    values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainEntry {
    pub domain: String,
    pub nu01: f64,
    pub nu11: f64,
    pub nu01_ds: f64,
    /// Refinement error estimates of the three values.
    pub errors: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityChain {
    pub entries: Vec<ChainEntry>,
    pub nu01_nondecreasing: bool,
    pub nu11_nondecreasing: bool,
    pub nu01_ds_nonincreasing: bool,
}

impl MonotonicityChain {
    pub fn passed(&self) -> bool {
        self.nu01_nondecreasing && self.nu11_nondecreasing && self.nu01_ds_nonincreasing
    }
}

/// Eigenvalues along a chain of nested domains sharing the free surface.
///
/// Inequalities are checked up to the sum of the refinement error estimates
/// of the compared values.
pub fn domain_monotonicity_experiment(
    family: &[MeridianDomain],
    spec: &GradingSpec,
) -> Result<MonotonicityChain> {
    for (i, w) in family.windows(2).enumerate() {
        if (w[0].r0() - w[1].r0()).abs() > 1e-12 * w[1].r0() {
            return Err(SloshError::InvalidFamily(format!(
                "members {i} and {} have different free surfaces",
                i + 1
            )));
        }
        if !w[0].is_contained_in(&w[1]) {
            return Err(SloshError::InvalidFamily(format!(
                "member {i} ({}) is not contained in member {} ({})",
                w[0].name(),
                i + 1,
                w[1].name()
            )));
        }
    }
    let coarse = coarsened(spec);
    let jobs: Vec<(usize, u32, ProblemKind, bool)> = (0..family.len())
        .flat_map(|d| {
            [
                (0, ProblemKind::Sloshing),
                (1, ProblemKind::Sloshing),
                (0, ProblemKind::DirichletSteklov),
            ]
            .into_iter()
            .flat_map(move |(m, kind)| [(d, m, kind, true), (d, m, kind, false)])
        })
        .collect();
    let solved: Vec<f64> = jobs
        .par_iter()
        .map(|&(d, m, kind, fine)| {
            let s = if fine { spec } else { &coarse };
            Ok(solve_mode(&family[d], s, m, kind, 1)?.eigenvalues[0])
        })
        .collect::<Result<_>>()?;
    let entries: Vec<ChainEntry> = family
        .iter()
        .enumerate()
        .map(|(d, dom)| {
            let at = |q: usize| {
                (
                    solved[6 * d + 2 * q],
                    (solved[6 * d + 2 * q] - solved[6 * d + 2 * q + 1]).abs(),
                )
            };
            let (nu01, e0) = at(0);
            let (nu11, e1) = at(1);
            let (ds, e2) = at(2);
            ChainEntry {
                domain: dom.name().to_string(),
                nu01,
                nu11,
                nu01_ds: ds,
                errors: [e0, e1, e2],
            }
        })
        .collect();
    let ordered = |get: fn(&ChainEntry) -> f64, q: usize, increasing: bool| {
        entries.windows(2).all(|w| {
            let tol = w[0].errors[q] + w[1].errors[q];
            let step = get(&w[1]) - get(&w[0]);
            if increasing {
                step >= -tol
            } else {
                step <= tol
            }
        })
    };
    Ok(MonotonicityChain {
        nu01_nondecreasing: ordered(|e| e.nu01, 0, true),
        nu11_nondecreasing: ordered(|e| e.nu11, 1, true),
        nu01_ds_nonincreasing: ordered(|e| e.nu01_ds, 2, false),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub s: f64,
    pub distance: f64,
    pub nu11: f64,
    pub delta_nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityTable {
    pub domain: String,
    pub base_nu11: f64,
    pub rows: Vec<ContinuityRow>,
    /// Least-squares slope of `log |Δν|` against `log d`.
    pub fitted_slope: f64,
    /// Smallest `C` with `|Δν| ≤ C d^{1/3}` on the sample.
    pub constant: f64,
}

/// `d(W_s, W_1)` and `|ν₁,₁(W_s) − ν₁,₁(W_1)|` along the straight deformation `W_s`.
pub fn continuity_experiment(
    domain: &MeridianDomain,
    s_list: &[f64],
    params: &ClassParams,
    spec: &GradingSpec,
) -> Result<ContinuityTable> {
    let base_rep = star_rep(domain, params, DEFAULT_ANGLES)?;
    let base = solve_mode(domain, spec, 1, ProblemKind::Sloshing, 1)?.eigenvalues[0];
    let rows: Vec<ContinuityRow> = s_list
        .par_iter()
        .map(|&s| {
            if s == 1.0 {
                return Ok(ContinuityRow {
                    s,
                    distance: 0.0,
                    nu11: base,
                    delta_nu: 0.0,
                });
            }
            let ws = deform(domain, s)?;
            let d = distance(&star_rep(&ws, params, DEFAULT_ANGLES)?, &base_rep)?;
            let nu = solve_mode(&ws, spec, 1, ProblemKind::Sloshing, 1)?.eigenvalues[0];
            Ok(ContinuityRow {
                s,
                distance: d,
                nu11: nu,
                delta_nu: (nu - base).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.distance > 0.0 && r.delta_nu > 0.0)
        .map(|r| (r.distance.ln(), r.delta_nu.ln()))
        .collect();
    let fitted_slope = if points.len() >= 2 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let constant = rows
        .iter()
        .filter(|r| r.distance > 0.0)
        .map(|r| r.delta_nu / r.distance.cbrt())
        .fold(0.0, f64::max);
    Ok(ContinuityTable {
        domain: domain.name().to_string(),
        base_nu11: base,
        rows,
        fitted_slope,
        constant,
    })
}

/// Relative L² distance on the free surface between a nodal field and `c·g`,
/// with `c` chosen by least squares in the surface mass inner product.
pub fn surface_l2_mismatch(problem: &ModeProblem, field: &[f64], target: &[f64]) -> f64 {
    let mf = problem.mf();
    let ft = mf.bilinear(field, target);
    let tt = mf.quad_form(target);
    let ff = mf.quad_form(field);
    if tt <= 0.0 || ff <= 0.0 {
        return f64::INFINITY;
    }
    let c = ft / tt;
    let diff: Vec<f64> = field.iter().zip(target).map(|(f, t)| f - c * t).collect();
    (mf.quad_form(&diff).max(0.0) / ff).sqrt()
}
