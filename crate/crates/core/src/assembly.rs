//! Weighted P1 operators of the reduced sloshing problems for azimuthal mode `m`.
//!
//! The weak form on the meridian domain is
//! `∫ (ψ_r φ_r + ψ_y φ_y) r dA + m² ∫ ψ φ / r dA = ν ∫_F ψ φ r ds`.

use crate::error::{Result, SloshError};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Neumann condition on the bottom.
    Sloshing,
    /// Homogeneous Dirichlet condition on the bottom.
    DirichletSteklov,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Sloshing => "sloshing",
            ProblemKind::DirichletSteklov => "dirichlet-steklov",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = SloshError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sloshing" => Ok(ProblemKind::Sloshing),
            "dirichlet-steklov" | "ds" => Ok(ProblemKind::DirichletSteklov),
            _ => Err(SloshError::Parse(format!("unknown problem kind '{s}'"))),
        }
    }
}

/// Assembled pencil `A v = ν Mf v` with constrained nodes eliminated.
///
/// Matrices are indexed by mesh node; rows and columns of constrained nodes
/// are empty.
#[derive(Clone, Debug)]
pub struct ModeProblem {
    m: u32,
    kind: ProblemKind,
    mesh: Arc<Mesh>,
    a: CsrMatrix,
    mf: CsrMatrix,
    inv_r_mass: CsrMatrix,
    constrained: Vec<usize>,
    is_constrained: Vec<bool>,
}

impl ModeProblem {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Stiffness operator including the `m²/r` term.
    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    /// Free-surface mass operator.
    pub fn mf(&self) -> &CsrMatrix {
        &self.mf
    }

    /// The assembled `∫ φ_i φ_j / r dA` block (before multiplication by `m²`).
    pub fn inv_r_mass(&self) -> &CsrMatrix {
        &self.inv_r_mass
    }

    /// Sorted indices of nodes fixed to zero.
    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn is_constrained(&self, node: usize) -> bool {
        self.is_constrained[node]
    }

    pub fn n_nodes(&self) -> usize {
        self.is_constrained.len()
    }

    /// Unconstrained free-surface nodes, ascending.
    pub fn surface_nodes(&self) -> Vec<usize> {
        self.mesh
            .tagged_nodes(BoundaryTag::FreeSurface)
            .into_iter()
            .filter(|&v| !self.is_constrained[v])
            .collect()
    }

    /// Unconstrained nodes off the free surface, ascending.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let mut on_surface = vec![false; self.n_nodes()];
        for v in self.mesh.tagged_nodes(BoundaryTag::FreeSurface) {
            on_surface[v] = true;
        }
        (0..self.n_nodes())
            .filter(|&v| !on_surface[v] && !self.is_constrained[v])
            .collect()
    }
}

/// Element contributions of one triangle: gradient stiffness and `1/r` mass.
fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let area2 =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = 0.5 * area2;
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = (p[j][1] - p[k][1]) / area2;
        c[i] = (p[k][0] - p[j][0]) / area2;
    }
    // r is linear, so the mid-edge rule integrates r·(const) exactly
    let r_integral = area * (p[0][0] + p[1][0] + p[2][0]) / 3.0;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) * r_integral;
        }
    }
    // mid-edge rule: at the midpoint of edge (i, j) both φ_i and φ_j are 1/2
    let mut w = [[0.0; 3]; 3];
    for e in 0..3 {
        let (i, j) = (e, (e + 1) % 3);
        let r_mid = 0.5 * (p[i][0] + p[j][0]);
        if r_mid <= 0.0 {
            continue;
        }
        let weight = area / 3.0 * 0.25 / r_mid;
        w[i][i] += weight;
        w[j][j] += weight;
        w[i][j] += weight;
        w[j][i] += weight;
    }
    (k, w)
}

/// Consistent `r`-weighted mass of a straight surface edge.
pub fn surface_edge_mass(ra: f64, rb: f64, length: f64) -> [[f64; 2]; 2] {
    let off = length * (ra + rb) / 12.0;
    [
        [length * (ra / 4.0 + rb / 12.0), off],
        [off, length * (ra / 12.0 + rb / 4.0)],
    ]
}

pub fn assemble(mesh: Arc<Mesh>, m: u32, kind: ProblemKind) -> Result<ModeProblem> {
    let n = mesh.n_nodes();
    let surface = mesh.tagged_nodes(BoundaryTag::FreeSurface);
    if surface.is_empty() {
        return Err(SloshError::InvalidProblem(
            "mesh has no free-surface edges".into(),
        ));
    }
    let mut is_constrained = vec![false; n];
    if m >= 1 {
        for v in mesh.tagged_nodes(BoundaryTag::Axis) {
            is_constrained[v] = true;
        }
        if let Some(v) = (0..n).find(|&v| mesh.nodes[v][0] == 0.0 && !is_constrained[v]) {
            return Err(SloshError::Assembly(format!(
                "node {v} lies on the axis but is not tagged Axis; mode {m} needs it constrained"
            )));
        }
    }
    if kind == ProblemKind::DirichletSteklov {
        for v in mesh.tagged_nodes(BoundaryTag::Bottom) {
            is_constrained[v] = true;
        }
    }
    if surface.iter().all(|&v| is_constrained[v]) {
        return Err(SloshError::InvalidProblem(
            "every free-surface node is constrained".into(),
        ));
    }

    let mut k_trip = Vec::with_capacity(9 * mesh.triangles.len());
    let mut w_trip = Vec::with_capacity(9 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.nodes[v]);
        let (ke, we) = element_matrices(p);
        for i in 0..3 {
            if is_constrained[tri[i]] {
                continue;
            }
            for j in 0..3 {
                if is_constrained[tri[j]] {
                    continue;
                }
                k_trip.push((tri[i], tri[j], ke[i][j]));
                if m >= 1 {
                    w_trip.push((tri[i], tri[j], we[i][j]));
                }
            }
        }
    }
    let mut m_trip = Vec::new();
    for e in mesh.edges_with_tag(BoundaryTag::FreeSurface) {
        let [a, b] = e.nodes;
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let length = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        let me = surface_edge_mass(pa[0], pb[0], length);
        let ids = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                if !is_constrained[ids[i]] && !is_constrained[ids[j]] {
                    m_trip.push((ids[i], ids[j], me[i][j]));
                }
            }
        }
    }

    let inv_r_mass = CsrMatrix::from_triplets(n, n, &w_trip);
    let m2 = f64::from(m) * f64::from(m);
    if m >= 1 {
        k_trip.extend(w_trip.iter().map(|&(i, j, v)| (i, j, m2 * v)));
    }
    let a = CsrMatrix::from_triplets(n, n, &k_trip);
    let mf = CsrMatrix::from_triplets(n, n, &m_trip);
    let constrained = (0..n).filter(|&v| is_constrained[v]).collect();
    Ok(ModeProblem {
        m,
        kind,
        mesh,
        a,
        mf,
        inv_r_mass,
        constrained,
        is_constrained,
    })
}

/// Rayleigh quotient `vᵀ A v / vᵀ Mf v`.
pub fn rayleigh(problem: &ModeProblem, v: &[f64]) -> Result<f64> {
    if v.len() != problem.n_nodes() {
        return Err(SloshError::InvalidParameter(format!(
            "vector has length {}, expected {}",
            v.len(),
            problem.n_nodes()
        )));
    }
    if let Some(&c) = problem.constrained().iter().find(|&&c| v[c] != 0.0) {
        return Err(SloshError::InvalidParameter(format!(
            "vector is nonzero at constrained node {c}"
        )));
    }
    let num = problem.a.quad_form(v);
    let den = problem.mf.quad_form(v);
    let scale = problem.mf.max_abs() * v.iter().map(|x| x * x).sum::<f64>();
    if !(den > 1e-14 * scale) {
        return Err(SloshError::DivisionGuard);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_cylinder, make_troesch};
    use crate::mesh::{generate, BoundaryEdge, GradingSpec};

    fn cylinder_mesh(n: usize) -> Arc<Mesh> {
        Arc::new(generate(&make_cylinder(1.0).unwrap(), &GradingSpec::new(n, n)).unwrap())
    }

    #[test]
    fn neumann_kernel() {
        let p = assemble(cylinder_mesh(8), 0, ProblemKind::Sloshing).unwrap();
        assert!(p.constrained().is_empty());
        let ones = vec![1.0; p.n_nodes()];
        let a1 = p.a().matvec(&ones);
        assert!(a1.iter().all(|v| v.abs() < 1e-12));
        assert!(rayleigh(&p, &ones).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mode_difference_is_the_inverse_r_block() {
        let mesh =
            Arc::new(generate(&make_troesch(1.0).unwrap(), &GradingSpec::new(10, 10)).unwrap());
        let p1 = assemble(mesh.clone(), 1, ProblemKind::Sloshing).unwrap();
        let p2 = assemble(mesh, 2, ProblemKind::Sloshing).unwrap();
        let scale = p2.a().max_abs();
        for (i, j, v) in p2.a().iter() {
            let diff = v - p1.a().get(i, j) - 3.0 * p1.inv_r_mass().get(i, j);
            assert!(diff.abs() <= 1e-14 * scale);
        }
        for &v in &p1.mesh().tagged_nodes(BoundaryTag::Axis) {
            assert!(p1.is_constrained(v));
        }
    }

    #[test]
    fn single_surface_edge_mass() {
        let me = surface_edge_mass(0.0, 1.0, 1.0);
        assert_eq!(me[1][1], 0.25);
        assert_eq!(me[0][0], 1.0 / 12.0);
        assert_eq!(me[0][1], 1.0 / 12.0);
    }

    #[test]
    fn surface_mass_integrates_r() {
        // 1ᵀ Mf 1 = ∫_0^1 r dr
        let p = assemble(cylinder_mesh(6), 0, ProblemKind::Sloshing).unwrap();
        let ones = vec![1.0; p.n_nodes()];
        assert!((p.mf().quad_form(&ones) - 0.5).abs() < 1e-14);
        let fs = p.mesh().tagged_nodes(BoundaryTag::FreeSurface);
        for (i, j, _) in p.mf().iter() {
            assert!(fs.contains(&i) && fs.contains(&j));
        }
    }

    #[test]
    fn dirichlet_constrains_bottom() {
        let p = assemble(cylinder_mesh(4), 0, ProblemKind::DirichletSteklov).unwrap();
        let bottom = p.mesh().tagged_nodes(BoundaryTag::Bottom);
        assert_eq!(p.constrained(), &bottom[..]);
        for &b in &bottom {
            assert_eq!(p.a().row(b).0.len(), 0);
        }
        // the corner is constrained, so four of five surface nodes remain
        assert_eq!(p.surface_nodes().len(), 4);
    }

    #[test]
    fn untagged_axis_is_rejected() {
        let mesh = generate(&make_cylinder(1.0).unwrap(), &GradingSpec::uniform(2, 2)).unwrap();
        let edges: Vec<BoundaryEdge> = mesh
            .boundary_edges
            .iter()
            .map(|e| BoundaryEdge {
                tag: if e.tag == BoundaryTag::Axis {
                    BoundaryTag::Bottom
                } else {
                    e.tag
                },
                ..*e
            })
            .collect();
        let relabeled = Mesh::from_parts(
            mesh.domain().clone(),
            mesh.nodes.clone(),
            mesh.triangles.clone(),
            edges,
            mesh.grading,
        );
        let err = assemble(Arc::new(relabeled), 1, ProblemKind::Sloshing).unwrap_err();
        assert!(matches!(err, SloshError::Assembly(_)));
        let no_surface = Mesh::from_parts(
            mesh.domain().clone(),
            mesh.nodes.clone(),
            mesh.triangles.clone(),
            Vec::new(),
            mesh.grading,
        );
        assert!(matches!(
            assemble(Arc::new(no_surface), 0, ProblemKind::Sloshing),
            Err(SloshError::InvalidProblem(_))
        ));
    }

    #[test]
    fn rayleigh_guards() {
        let p = assemble(cylinder_mesh(4), 1, ProblemKind::Sloshing).unwrap();
        let zero = vec![0.0; p.n_nodes()];
        assert!(matches!(
            rayleigh(&p, &zero),
            Err(SloshError::DivisionGuard)
        ));
        let ones = vec![1.0; p.n_nodes()];
        assert!(matches!(
            rayleigh(&p, &ones),
            Err(SloshError::InvalidParameter(_))
        ));
    }

    #[test]
    fn scale_covariance() {
        let mesh = cylinder_mesh(5);
        let big = Arc::new(mesh.scaled(3.0).unwrap());
        let p = assemble(mesh, 1, ProblemKind::Sloshing).unwrap();
        let q = assemble(big, 1, ProblemKind::Sloshing).unwrap();
        for (i, j, v) in p.a().iter() {
            assert!((q.a().get(i, j) - 3.0 * v).abs() <= 1e-13 * v.abs().max(1e-300));
        }
        for (i, j, v) in p.mf().iter() {
            assert!((q.mf().get(i, j) - 9.0 * v).abs() <= 1e-13 * v.abs());
        }
    }
}
