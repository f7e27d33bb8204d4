use proptest::prelude::*;
use slosh_core::assembly::{assemble, rayleigh, ProblemKind};
use slosh_core::eigensolver::{solve, solve_all};
use slosh_core::geometry::{
    deform, distance, make_cone, make_cylinder, make_hemisphere, make_profile,
    make_spherical_bulge, make_troesch, star_rep, ClassParams, MeridianDomain,
};
use slosh_core::mesh::{generate, GradingSpec};
use std::sync::Arc;

fn domain_strategy() -> impl Strategy<Value = MeridianDomain> {
    prop_oneof![
        (0.2f64..2.5).prop_map(|h| make_cylinder(h).unwrap()),
        (0.3f64..2.0).prop_map(|l| make_cone(l).unwrap()),
        (0.2f64..2.0).prop_map(|l| make_troesch(l).unwrap()),
        (0.2f64..1.5).prop_map(|d| make_spherical_bulge(d).unwrap()),
        Just(make_hemisphere()),
    ]
}

fn kind_strategy() -> impl Strategy<Value = ProblemKind> {
    prop_oneof![
        Just(ProblemKind::Sloshing),
        Just(ProblemKind::DirichletSteklov)
    ]
}

/// Deterministic pseudo-random vector from a seed.
fn vector(seed: u64, n: usize) -> Vec<f64> {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn operators_are_symmetric_and_semidefinite(
        domain in domain_strategy(), m in 0u32..4, kind in kind_strategy(), n in 3usize..10, seed in any::<u64>()
    ) {
        let mesh = Arc::new(generate(&domain, &GradingSpec::new(n, n)).unwrap());
        let p = assemble(mesh, m, kind).unwrap();
        let (a, mf) = (p.a(), p.mf());
        prop_assert!(a.asymmetry() <= 1e-14 * a.max_abs());
        prop_assert!(mf.asymmetry() <= 1e-14 * mf.max_abs());
        for k in 0..100u64 {
            let v = vector(seed ^ k, p.n_nodes());
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!(a.quad_form(&v) >= -1e-12 * norm2 * a.max_abs());
            prop_assert!(mf.quad_form(&v) >= -1e-14 * norm2 * mf.max_abs());
        }
    }

    #[test]
    fn stiffness_grows_with_the_mode(domain in domain_strategy(), n in 3usize..8, seed in any::<u64>()) {
        let mesh = Arc::new(generate(&domain, &GradingSpec::new(n, n)).unwrap());
        let forms: Vec<_> = (0..4).map(|m| assemble(mesh.clone(), m, ProblemKind::Sloshing).unwrap()).collect();
        let mut v = vector(seed, mesh.n_nodes());
        for node in forms[1].constrained() {
            v[*node] = 0.0;
        }
        let energies: Vec<f64> = forms.iter().map(|p| p.a().quad_form(&v)).collect();
        for w in energies.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-14));
        }
    }

    #[test]
    fn spectra_are_consistent(domain in domain_strategy(), m in 0u32..3, kind in kind_strategy(), n in 4usize..9, seed in any::<u64>()) {
        let mesh = Arc::new(generate(&domain, &GradingSpec::new(n, n)).unwrap());
        let sol = solve_all(assemble(mesh, m, kind).unwrap()).unwrap();
        let p = sol.problem();
        prop_assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(sol.eigenvalues.iter().all(|&nu| nu >= -1e-10));
        for (i, vi) in sol.fields.iter().enumerate() {
            for (j, vj) in sol.fields.iter().enumerate() {
                let g = p.mf().bilinear(vi, vj);
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - delta).abs() <= 1e-8, "gram[{},{}] = {}", i, j, g);
            }
            let q = rayleigh(p, vi).unwrap();
            prop_assert!((q - sol.eigenvalues[i]).abs() <= 1e-9 * sol.eigenvalues[i].abs().max(1e-300) + 1e-12);
            if m == 0 && kind == ProblemKind::Sloshing {
                let integral: f64 = p.mf().matvec(vi).iter().sum();
                prop_assert!(integral.abs() <= 1e-8);
            }
        }
        // the first eigenvalue bounds every admissible Rayleigh quotient from below
        let mut v = vector(seed, p.n_nodes());
        for node in p.constrained() {
            v[*node] = 0.0;
        }
        if m == 0 && kind == ProblemKind::Sloshing {
            let mean = p.mf().matvec(&v).iter().sum::<f64>() / p.mf().matvec(&vec![1.0; p.n_nodes()]).iter().sum::<f64>();
            v.iter_mut().for_each(|x| *x -= mean);
        }
        if let Ok(q) = rayleigh(p, &v) {
            prop_assert!(q >= sol.eigenvalues[0] - 1e-9 * sol.eigenvalues[0].abs());
        }
    }

    #[test]
    fn eigenvalues_scale_inversely_with_size(domain in domain_strategy(), m in 0u32..3, factor in 0.2f64..5.0) {
        let mesh = generate(&domain, &GradingSpec::new(8, 8)).unwrap();
        let big = mesh.scaled(factor).unwrap();
        let a = solve(assemble(Arc::new(mesh), m, ProblemKind::Sloshing).unwrap(), 4).unwrap();
        let b = solve(assemble(Arc::new(big), m, ProblemKind::Sloshing).unwrap(), 4).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((y * factor / x - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn generated_profiles_round_trip(domain in domain_strategy()) {
        let profile = domain.profile();
        let samples: Vec<(f64, f64)> = profile.y_samples().iter().copied().zip(profile.g_samples().iter().copied()).collect();
        prop_assume!(samples.iter().all(|s| s.1 > 0.0) || !domain.name().starts_with("bulge"));
        let rebuilt = make_profile(&samples).unwrap();
        prop_assert_eq!(rebuilt.y0(), domain.y0());
        prop_assert_eq!(rebuilt.r0(), domain.r0());
    }

    #[test]
    fn troesch_fits_inside_its_cone(lambda in 0.05f64..2.0) {
        let t = make_troesch(lambda).unwrap();
        let c = make_cone(lambda).unwrap();
        for i in 0..=2000 {
            let y = t.y0() * i as f64 / 2000.0;
            prop_assert!(t.radius_at(y) <= c.radius_at(y));
        }
    }

    #[test]
    fn deformation_is_affine_and_keeps_john(domain in domain_strategy(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let a = deform(&domain, s).unwrap();
        let b = deform(&domain, t).unwrap();
        let mid = deform(&domain, 0.5 * (s + t)).unwrap();
        for i in 0..=200 {
            let y = domain.y0() * i as f64 / 200.0;
            let avg = 0.5 * (a.radius_at(y) + b.radius_at(y));
            prop_assert!((mid.radius_at(y) - avg).abs() <= 4.0 * f64::EPSILON * avg.max(1.0));
        }
        if domain.john() {
            prop_assert!(a.john() && b.john() && mid.john());
        }
    }

    #[test]
    fn star_distance_is_a_metric(s in 0.3f64..1.0, t in 0.3f64..1.0, u in 0.3f64..1.0) {
        let params = ClassParams::new(0.05, 6.0, 1.0, 1.0).unwrap();
        let base = make_troesch(1.0).unwrap();
        let reps: Vec<_> = [s, t, u]
            .iter()
            .map(|&x| star_rep(&deform(&base, x).unwrap(), &params, 1024).unwrap())
            .collect();
        let d = |i: usize, j: usize| distance(&reps[i], &reps[j]).unwrap();
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    }
}
