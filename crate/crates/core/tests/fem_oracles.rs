use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stoch_slod::fem::{
    assemble_load_fn, assemble_stiffness, dense, harmonic_extension, norms, solve_dirichlet, solve_saddle_point,
    ConstraintMatrix, FineFunction, LocalProblem, SolverKind,
};
use stoch_slod::grid::{GridSpec, Level, MeshRegion, NodeKind};

fn coeff(region: &MeshRegion, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..region.num_cells()).map(|_| rng.random_range(0.1..1.0)).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Regions with at most 200 free nodes, some touching the domain boundary.
fn small_regions() -> Vec<MeshRegion> {
    vec![
        MeshRegion::new(1, 8, [0, 0], [120, 1]),
        MeshRegion::new(1, 8, [37, 0], [201, 1]),
        MeshRegion::new(2, 4, [0, 0], [15, 15]),
        MeshRegion::new(2, 5, [3, 11], [21, 20]),
        MeshRegion::new(2, 5, [16, 0], [32, 13]),
    ]
}

#[test]
fn dirichlet_solve_matches_dense() {
    for (k, region) in small_regions().into_iter().enumerate() {
        let op = assemble_stiffness(&region, &coeff(&region, k as u64)).unwrap();
        assert!(op.num_free() <= 200);
        let load = assemble_load_fn(&region, |x| 1.0 + x[0] - 2.0 * x[1]);
        let u = solve_dirichlet(&op, &load).unwrap();
        let x = dense::solve_free(&op, &op.gather(&load)).unwrap();
        assert!(rel_diff(&op.gather(&u.values), &x) < 1e-10, "region {k}");
        let dense_problem = LocalProblem::with_solver(op.clone(), SolverKind::Dense).unwrap();
        let v = dense_problem.solve(&load).unwrap();
        assert!(rel_diff(&v.values, &u.values) < 1e-10);
    }
}

#[test]
fn harmonic_extension_matches_dense() {
    for (k, region) in small_regions().into_iter().enumerate() {
        let c = coeff(&region, 10 + k as u64);
        let op = assemble_stiffness(&region, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let boundary: Vec<f64> = (0..region.num_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = harmonic_extension(&region, &c, &boundary).unwrap();
        let v = dense::extend(&op, &boundary).unwrap();
        assert!(rel_diff(&u.values, &v) < 1e-10, "region {k}");
        for (n, kind) in region.node_kinds().iter().enumerate() {
            match kind {
                NodeKind::Gamma => assert_eq!(u.values[n], 0.0),
                NodeKind::Trace => assert_eq!(u.values[n], boundary[n]),
                NodeKind::Free => {}
            }
        }
    }
}

#[test]
fn saddle_point_matches_dense_kkt() {
    let cases = [(1, 3, 7, 3, 2), (1, 3, 7, 0, 1), (2, 2, 4, 5, 1), (2, 2, 4, 0, 1)];
    for (d, lc, lh, t, ell) in cases {
        let spec = GridSpec::new(d, lc, lc, lh).unwrap();
        let patch = spec.patch(t, ell).unwrap();
        let region = patch.region();
        let problem = LocalProblem::assemble(&region, &coeff(&region, t as u64)).unwrap();
        let op = problem.operator();
        assert!(op.num_free() <= 200, "{} unknowns", op.num_free());
        let b = ConstraintMatrix::new(op, lc).unwrap();
        let rhs = op.gather(&assemble_load_fn(&region, |x| (7.0 * x[0]).sin() + x[1]));
        let (x, p) = solve_saddle_point(&problem, &b, &rhs).unwrap();
        let (xd, pd) = dense::solve_kkt(op, &b, &rhs).unwrap();
        assert!(rel_diff(&x, &xd) < 1e-8);
        assert!(rel_diff(&p, &pd) < 1e-8);
        // Residual of the full system.
        let r1: Vec<f64> = op.apply_free(&x).iter().zip(b.apply_transpose(&p)).map(|(a, c)| a + c).collect();
        assert!(rel_diff(&r1, &rhs) < 1e-10);
        assert!(b.apply(&x).iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn maximum_principle() {
    let region = MeshRegion::new(2, 5, [2, 4], [18, 30]);
    let c = coeff(&region, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let boundary: Vec<f64> = (0..region.num_nodes()).map(|_| rng.random_range(-2.0..3.0)).collect();
    let u = harmonic_extension(&region, &c, &boundary).unwrap();
    let kinds = region.node_kinds();
    let on_boundary = || boundary.iter().zip(&kinds).filter(|(_, k)| **k != NodeKind::Free).map(|(v, _)| *v);
    let lo = on_boundary().fold(f64::INFINITY, f64::min);
    let hi = on_boundary().fold(f64::NEG_INFINITY, f64::max);
    // Q1 on a uniform square mesh has a nonpositive off-diagonal stiffness,
    // so the discrete maximum principle holds.
    for v in &u.values {
        assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
    }
}

#[test]
fn energy_bounded_by_coercivity() {
    // a(u,u) = (f,u) and a >= 0.1 give |u|_1 <= C_P |f| / 0.1 with C_P = 1/(pi sqrt 2).
    let region = MeshRegion::new(2, 5, [0, 0], [32, 32]);
    let op = assemble_stiffness(&region, &coeff(&region, 5)).unwrap();
    let load = assemble_load_fn(&region, |_| 1.0);
    let u = solve_dirichlet(&op, &load).unwrap();
    let energy: f64 = u.values.iter().zip(op.apply(&u.values)).map(|(a, b)| a * b).sum();
    let work: f64 = u.values.iter().zip(&load).map(|(a, b)| a * b).sum();
    assert!((energy - work).abs() < 1e-12 * work);
    let h1 = norms(&u).h1semi;
    assert!(h1 <= 1.0 / (std::f64::consts::PI * 2f64.sqrt()) / 0.1);
}

#[test]
fn multi_rhs_solve_matches_single() {
    let region = MeshRegion::new(2, 5, [0, 3], [17, 25]);
    let problem = LocalProblem::assemble(&region, &coeff(&region, 8)).unwrap();
    let n = problem.operator().num_free();
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let b: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = b.clone();
    problem.solve_free_in_place(&mut x, m);
    for j in 0..m {
        let mut col: Vec<f64> = (0..n).map(|i| b[i * m + j]).collect();
        problem.solve_free_in_place(&mut col, 1);
        for i in 0..n {
            assert_eq!(col[i], x[i * m + j]);
        }
    }
}

#[test]
fn element_averages_of_constants() {
    let spec = GridSpec::new(2, 2, 3, 5).unwrap();
    let patch = spec.patch(6, 1).unwrap();
    let region = patch.region();
    let f = FineFunction::new(region.clone(), vec![2.5; region.num_nodes()]);
    let avg = f.element_averages(spec.log(Level::Coarse)).unwrap();
    assert_eq!(avg.len(), patch.len());
    assert!(avg.iter().all(|v| (v - 2.5).abs() < 1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solve_is_linear(seed in 0u64..1000, a in -3.0f64..3.0) {
        let region = MeshRegion::new(2, 4, [1, 0], [9, 12]);
        let problem = LocalProblem::assemble(&region, &coeff(&region, seed)).unwrap();
        let f = assemble_load_fn(&region, |x| x[0] * x[1]);
        let g = assemble_load_fn(&region, |x| (3.0 * x[0]).cos());
        let fg: Vec<f64> = f.iter().zip(&g).map(|(p, q)| a * p + q).collect();
        let u = problem.solve(&f).unwrap().values;
        let v = problem.solve(&g).unwrap().values;
        let w = problem.solve(&fg).unwrap().values;
        let lin: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + q).collect();
        prop_assert!(rel_diff(&w, &lin) < 1e-11);
    }

    #[test]
    fn stiffness_is_symmetric_positive(seed in 0u64..1000) {
        let region = MeshRegion::new(2, 3, [0, 2], [6, 8]);
        let op = assemble_stiffness(&region, &coeff(&region, seed)).unwrap();
        let a = op.to_dense();
        prop_assert!((&a - a.transpose()).amax() < 1e-15);
        let e = a.clone().symmetric_eigen();
        prop_assert!(e.eigenvalues.min() > 0.0);
        let x = DVector::from_fn(op.num_free(), |i, _| (i as f64).sin());
        let y = op.apply_free(x.as_slice());
        prop_assert!(rel_diff(&y, (&a * &x).as_slice()) < 1e-14);
    }
}
