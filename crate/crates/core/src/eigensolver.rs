//! Steklov pencils solved by Dirichlet-to-Neumann reduction onto the free surface.

use crate::assembly::{ModeProblem, ProblemKind};
use crate::error::{Result, SloshError};
use crate::linalg::{self, CsrMatrix, DenseMatrix, SkylineCholesky};
use crate::mesh::BoundaryTag;
use serde::Serialize;
use std::sync::Arc;

/// Relative residual every interior solve must reach.
pub const INTERIOR_TOL: f64 = 1e-11;
/// Envelope entries above which the interior solve switches to conjugate gradients.
pub const SKYLINE_LIMIT: usize = 60_000_000;
/// A near-zero eigenvalue below this fraction of the next one is the Neumann constant.
pub const ZERO_MODE_TOL: f64 = 1e-8;
/// Eigenvalues closer than this (relative) form a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

enum Method {
    Direct(SkylineCholesky),
    Iterative,
}

/// Solver for the interior block `A_II` (unconstrained nodes off the free surface).
pub struct InteriorSolver {
    nodes: Vec<usize>,
    a_ii: CsrMatrix,
    method: Method,
}

impl InteriorSolver {
    /// Mesh node of each interior unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a_ii
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.method, Method::Direct(_))
    }

    /// Solves `A_II x = b` to relative residual [`INTERIOR_TOL`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bnorm = linalg::norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.method {
            Method::Direct(chol) => {
                let mut x = b.to_vec();
                chol.solve_in_place(&mut x);
                // a few steps of iterative refinement guard the residual contract
                for _ in 0..3 {
                    let mut r = linalg::residual(&self.a_ii, &x, b);
                    if linalg::norm(&r) <= INTERIOR_TOL * bnorm {
                        return Ok(x);
                    }
                    chol.solve_in_place(&mut r);
                    for (xi, ri) in x.iter_mut().zip(&r) {
                        *xi += ri;
                    }
                }
                let res = linalg::norm(&linalg::residual(&self.a_ii, &x, b)) / bnorm;
                if res <= INTERIOR_TOL {
                    Ok(x)
                } else {
                    Err(SloshError::Factorization(format!(
                        "interior solve stalled at relative residual {res:e}"
                    )))
                }
            }
            Method::Iterative => {
                let max_iter = 20 * self.dim().max(100);
                Ok(linalg::pcg(&self.a_ii, b, 0.1 * INTERIOR_TOL, max_iter)?.0)
            }
        }
    }
}

pub fn interior_factor(problem: &ModeProblem) -> Result<InteriorSolver> {
    let nodes = problem.interior_nodes();
    let a_ii = problem.a().submatrix(&nodes, &nodes);
    let method = if SkylineCholesky::envelope_size(&a_ii) <= SKYLINE_LIMIT {
        Method::Direct(SkylineCholesky::factor(&a_ii)?)
    } else {
        log::info!(
            "interior block of size {} exceeds the envelope limit; using conjugate gradients",
            nodes.len()
        );
        Method::Iterative
    };
    Ok(InteriorSolver {
        nodes,
        a_ii,
        method,
    })
}

/// Dense Steklov pair on the free-surface unknowns.
pub struct DtnReduction {
    /// Schur complement `A_SS − A_SI A_II⁻¹ A_IS`.
    pub s: DenseMatrix,
    /// Free-surface mass restricted to the surface unknowns.
    pub ms: DenseMatrix,
    /// Mesh node of each surface unknown.
    pub surface: Vec<usize>,
    /// Discrete harmonic extension `A_II⁻¹ A_IS`, one column per surface unknown.
    extension: Vec<Vec<f64>>,
    interior: InteriorSolver,
}

impl DtnReduction {
    pub fn interior(&self) -> &InteriorSolver {
        &self.interior
    }

    /// Nodal vector with the given surface trace, extended discretely harmonically.
    pub fn extend(&self, n_nodes: usize, trace: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; n_nodes];
        for (&v, &t) in self.surface.iter().zip(trace) {
            full[v] = t;
        }
        for (k, &v) in self.interior.nodes.iter().enumerate() {
            full[v] = -self
                .extension
                .iter()
                .zip(trace)
                .map(|(col, t)| col[k] * t)
                .sum::<f64>();
        }
        full
    }
}

pub fn dtn_reduce(problem: &ModeProblem) -> Result<DtnReduction> {
    let interior = interior_factor(problem)?;
    let surface = problem.surface_nodes();
    let ns = surface.len();
    let a_is = problem.a().submatrix(&interior.nodes, &surface);
    let a_ss = problem.a().submatrix(&surface, &surface);
    // rows of A_SI are the columns of A_IS
    let a_si = a_is.transpose();

    let mut extension = Vec::with_capacity(ns);
    for j in 0..ns {
        let mut rhs = vec![0.0; interior.dim()];
        let (rows, vals) = a_si.row(j);
        for (&i, &v) in rows.iter().zip(vals) {
            rhs[i] = v;
        }
        extension.push(interior.solve(&rhs)?);
    }
    let mut s = DenseMatrix::zeros(ns);
    for i in 0..ns {
        let (cols, vals) = a_si.row(i);
        for j in 0..ns {
            let coupling: f64 = cols
                .iter()
                .zip(vals)
                .map(|(&k, &v)| v * extension[j][k])
                .sum();
            *s.at_mut(i, j) = a_ss.get(i, j) - coupling;
        }
    }
    s.symmetrize();
    let ms = DenseMatrix {
        n: ns,
        data: problem.mf().submatrix(&surface, &surface).to_dense(),
    };
    Ok(DtnReduction {
        s,
        ms,
        surface,
        extension,
        interior,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSolution {
    #[serde(skip)]
    problem: Arc<ModeProblem>,
    pub eigenvalues: Vec<f64>,
    /// Nodal eigenfunctions, one per eigenvalue.
    pub fields: Vec<Vec<f64>>,
    /// `ν₂ − ν₁`, when at least two eigenvalues were computed.
    pub gap: Option<f64>,
    pub residuals: Vec<f64>,
    /// Index ranges of eigenvalues equal within [`CLUSTER_TOL`].
    pub clusters: Vec<Vec<usize>>,
    /// Number of eigenvalues the discretization can deliver.
    pub available: usize,
}

impl EigenSolution {
    pub fn problem(&self) -> &ModeProblem {
        &self.problem
    }

    pub fn problem_arc(&self) -> &Arc<ModeProblem> {
        &self.problem
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Discrete `∫_F ψ r ds` of field `k`.
    pub fn surface_mean(&self, k: usize) -> f64 {
        let ones = vec![1.0; self.problem.n_nodes()];
        self.problem.mf().bilinear(&ones, &self.fields[k])
    }
}

/// Groups ascending eigenvalues whose consecutive relative spacing is below [`CLUSTER_TOL`].
pub fn clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g)
                if {
                    let prev = values[*g.last().unwrap()];
                    (v - prev).abs() <= CLUSTER_TOL * v.abs().max(prev.abs())
                } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// The `k` lowest eigenpairs of the pencil, or all of them when fewer exist.
pub fn solve(problem: impl Into<Arc<ModeProblem>>, k: usize) -> Result<EigenSolution> {
    if k == 0 {
        return Err(SloshError::InvalidParameter("k must be at least 1".into()));
    }
    solve_inner(problem.into(), Some(k))
}

/// Every eigenpair the discretization delivers.
pub fn solve_all(problem: impl Into<Arc<ModeProblem>>) -> Result<EigenSolution> {
    solve_inner(problem.into(), None)
}

fn solve_inner(problem: Arc<ModeProblem>, k: Option<usize>) -> Result<EigenSolution> {
    let reduction = dtn_reduce(&problem)?;
    let (mut values, vectors) = linalg::generalized_symmetric_eigen(&reduction.s, &reduction.ms)?;
    let ns = reduction.surface.len();
    let mut columns: Vec<usize> = (0..ns).collect();

    if problem.m() == 0 && problem.kind() == ProblemKind::Sloshing {
        if ns < 2 {
            return Err(SloshError::InvalidProblem(
                "too few surface unknowns to separate the constant mode".into(),
            ));
        }
        if values[0].abs() > ZERO_MODE_TOL * values[1].abs() {
            return Err(SloshError::Numeric(format!(
                "constant mode not separated: smallest eigenvalues {:e} and {:e}",
                values[0], values[1]
            )));
        }
        values.remove(0);
        columns.remove(0);
    }
    let available = values.len();
    let take = match k {
        Some(k) if k > available => {
            log::warn!("requested {k} eigenvalues, only {available} available; truncating");
            available
        }
        Some(k) => k,
        None => available,
    };
    values.truncate(take);
    columns.truncate(take);

    let n = problem.n_nodes();
    let corner = problem
        .mesh()
        .corner_node()
        .filter(|&c| !problem.is_constrained(c));
    let mut fields = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    for (&col, &nu) in columns.iter().zip(&values) {
        let trace = vectors.column(col);
        let mut field = reduction.extend(n, &trace);
        let peak = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let anchor = corner
            .map(|c| field[c])
            .filter(|v| v.abs() > 1e-8 * peak)
            .unwrap_or_else(|| {
                trace.iter().copied().fold(
                    0.0,
                    |best: f64, v| if v.abs() > best.abs() { v } else { best },
                )
            });
        if anchor < 0.0 {
            field.iter_mut().for_each(|v| *v = -*v);
        }
        let av = problem.a().matvec(&field);
        let mv = problem.mf().matvec(&field);
        let res = av
            .iter()
            .zip(&mv)
            .map(|(a, m)| (a - nu * m) * (a - nu * m))
            .sum::<f64>()
            .sqrt();
        fields.push(field);
        residuals.push(res);
    }
    let gap = (values.len() >= 2).then(|| values[1] - values[0]);
    let clusters = clusters(&values);
    Ok(EigenSolution {
        problem,
        eigenvalues: values,
        fields,
        gap,
        residuals,
        clusters,
        available,
    })
}

/// Free-surface values `(r, ψ)` of field `k`, ordered by `r`.
pub fn surface_trace(solution: &EigenSolution, k: usize) -> Vec<(f64, f64)> {
    let mesh = solution.problem().mesh();
    let mut nodes = mesh.tagged_nodes(BoundaryTag::FreeSurface);
    nodes.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
    nodes
        .into_iter()
        .map(|v| (mesh.nodes[v][0], solution.fields[k][v]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, rayleigh};
    use crate::geometry::{make_cylinder, make_troesch};
    use crate::mesh::{generate, GradingSpec, Mesh};
    use crate::oracles::cylinder_spectrum;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(generate(&make_cylinder(1.0).unwrap(), &GradingSpec::new(n, n)).unwrap())
    }

    #[test]
    fn interior_round_trip() {
        let p = assemble(mesh(8), 1, ProblemKind::Sloshing).unwrap();
        let solver = interior_factor(&p).unwrap();
        assert!(solver.is_direct());
        let w: Vec<f64> = (0..solver.dim())
            .map(|i| ((i * 7 % 13) as f64) - 6.0)
            .collect();
        let b = solver.matrix().matvec(&w);
        let x = solver.solve(&b).unwrap();
        let err = x
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10 * w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        assert!(solver
            .solve(&vec![0.0; solver.dim()])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn constants_extend_to_constants() {
        let p = assemble(mesh(6), 0, ProblemKind::Sloshing).unwrap();
        let red = dtn_reduce(&p).unwrap();
        let ones = vec![1.0; red.surface.len()];
        let full = red.extend(p.n_nodes(), &ones);
        assert!(full.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let s1 = red.s.matvec(&ones);
        assert!(s1.iter().all(|v| v.abs() < 1e-10));
        assert_eq!(red.surface.len(), 7);
        let p1 = assemble(mesh(6), 1, ProblemKind::Sloshing).unwrap();
        assert_eq!(dtn_reduce(&p1).unwrap().surface.len(), 6);
    }

    #[test]
    fn cylinder_first_mode() {
        let p = assemble(mesh(32), 1, ProblemKind::Sloshing).unwrap();
        let sol = solve(p, 3).unwrap();
        let exact = cylinder_spectrum(1.0).unwrap().nu11;
        assert!((sol.eigenvalues[0] - exact).abs() / exact < 5e-3);
        let scale = sol.problem().a().max_abs();
        for (k, &r) in sol.residuals.iter().enumerate() {
            assert!(r <= 1e-9 * scale, "residual {k}: {r:e}");
            let q = rayleigh(sol.problem(), &sol.fields[k]).unwrap();
            assert!((q - sol.eigenvalues[k]).abs() <= 1e-9 * sol.eigenvalues[k]);
        }
        let corner = sol.problem().mesh().corner_node().unwrap();
        assert!(sol.fields[0][corner] > 0.0);
        assert!(sol.gap.unwrap() > 0.0);
    }

    #[test]
    fn orthonormal_fields() {
        let p = assemble(mesh(10), 0, ProblemKind::Sloshing).unwrap();
        let sol = solve(p, 5).unwrap();
        for i in 0..5 {
            assert!(sol.surface_mean(i).abs() <= 1e-8);
            for j in 0..5 {
                let g = sol.problem().mf().bilinear(&sol.fields[i], &sol.fields[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() <= 1e-8);
            }
        }
        assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dirichlet_sign_is_fixed_by_the_largest_value() {
        let p = assemble(mesh(8), 0, ProblemKind::DirichletSteklov).unwrap();
        let sol = solve(p, 1).unwrap();
        let field = &sol.fields[0];
        assert!(field.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn truncation_and_bad_k() {
        let p = Arc::new(assemble(mesh(4), 1, ProblemKind::Sloshing).unwrap());
        let sol = solve(p.clone(), 100).unwrap();
        assert_eq!(sol.len(), 4);
        assert_eq!(sol.available, 4);
        assert!(solve(p, 0).is_err());
    }

    #[test]
    fn troesch_contains_lambda() {
        let m =
            Arc::new(generate(&make_troesch(1.0).unwrap(), &GradingSpec::uniform(48, 48)).unwrap());
        let sol = solve(assemble(m, 0, ProblemKind::Sloshing).unwrap(), 4).unwrap();
        assert!(sol.eigenvalues.iter().any(|v| (v - 1.0).abs() < 1e-2));
    }

    #[test]
    fn cluster_grouping() {
        let groups = clusters(&[1.0, 1.0 + 1e-8, 2.0, 3.0, 3.0]);
        assert_eq!(groups, vec![vec![0, 1], vec![2], vec![3, 4]]);
        assert!(clusters(&[]).is_empty());
    }
}
