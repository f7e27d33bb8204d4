//! Dense cross-check of the Schur-complement eigensolver on small meshes.

use nalgebra::{DMatrix, SymmetricEigen};
use slosh_core::assembly::{assemble, ModeProblem, ProblemKind};
use slosh_core::eigensolver::solve_all;
use slosh_core::geometry::{
    make_cone, make_cylinder, make_hemisphere, make_spherical_bulge, make_troesch,
};
use slosh_core::linalg::CsrMatrix;
use slosh_core::mesh::{generate, GradingSpec};
use std::sync::Arc;

const SHIFT: f64 = 1.0;

fn restrict(mat: &CsrMatrix, free: &[usize]) -> DMatrix<f64> {
    let sub = mat.submatrix(free, free);
    DMatrix::from_row_slice(free.len(), free.len(), &sub.to_dense())
}

/// Eigenvalues of `A x = ν Mf x` from the shifted pencil, ascending.
fn dense_spectrum(p: &ModeProblem) -> Vec<f64> {
    let free: Vec<usize> = (0..p.n_nodes()).filter(|&v| !p.is_constrained(v)).collect();
    let a = restrict(p.a(), &free);
    let mf = restrict(p.mf(), &free);
    let b = &a + &mf * SHIFT;
    let l = b
        .cholesky()
        .expect("shifted pencil is positive definite")
        .l();
    let linv = l.try_inverse().unwrap();
    let c = &linv * &mf * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut mu: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    mu.sort_by(|x, y| y.total_cmp(x));
    let ns = p.surface_nodes().len();
    let mut nu: Vec<f64> = mu[..ns].iter().map(|m| 1.0 / m - SHIFT).collect();
    nu.sort_by(f64::total_cmp);
    if p.m() == 0 && p.kind() == ProblemKind::Sloshing {
        assert!(nu[0].abs() < 1e-9 * nu[1]);
        nu.remove(0);
    }
    nu
}

#[test]
fn schur_path_matches_dense_pencil() {
    let domains = [
        make_cylinder(1.0).unwrap(),
        make_cone(1.0).unwrap(),
        make_troesch(1.0).unwrap(),
        make_spherical_bulge(1.0).unwrap(),
        make_hemisphere(),
    ];
    for domain in &domains {
        for spec in [GradingSpec::uniform(8, 8), GradingSpec::new(12, 10)] {
            let mesh = Arc::new(generate(domain, &spec).unwrap());
            assert!(mesh.n_nodes() <= 200);
            for m in 0..3 {
                for kind in [ProblemKind::Sloshing, ProblemKind::DirichletSteklov] {
                    let p = assemble(mesh.clone(), m, kind).unwrap();
                    let dense = dense_spectrum(&p);
                    let sol = solve_all(p).unwrap();
                    assert_eq!(sol.eigenvalues.len(), dense.len());
                    for (x, y) in sol.eigenvalues.iter().zip(&dense) {
                        assert!(
                            (x - y).abs() <= 1e-9 * y.abs().max(1.0),
                            "{} m={m} {kind:?}: {x} vs {y}",
                            domain.name()
                        );
                    }
                }
            }
        }
    }
}
