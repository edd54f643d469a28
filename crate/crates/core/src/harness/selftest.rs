//! Quick oracle checks runnable from the command line.

use crate::fem::{assemble_stiffness, dense, harmonic_extension, norms, ConstraintMatrix, FineFunction, LocalProblem, SolverKind};
use crate::field::{generalized_golden_ratio, FieldLaw};
use crate::grid::{GridSpec, Level, MeshRegion, NodeKind, P0Function};
use crate::lod::{bubble, lod_correction};
use crate::slod::{assemble_coarse_solution, build_model, compute_crb, crb_from_gram, ModelOptions, SamplingConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> SelfCheck {
    SelfCheck { name, passed: value.is_finite() && value <= tol, detail: format!("{value:.3e} (tolerance {tol:.0e})") }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> SelfCheck {
    SelfCheck { name, passed: false, detail: e.to_string() }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_coeff(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.1..1.0)).collect()
}

fn banded_vs_dense() -> SelfCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let region = MeshRegion::new(2, 4, [0, 0], [12, 9]);
    let coeff = random_coeff(region.num_cells(), &mut rng);
    let mut run = || -> crate::Result<f64> {
        let op = assemble_stiffness(&region, &coeff)?;
        let rhs: Vec<f64> = (0..op.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let banded = LocalProblem::with_solver(op.clone(), SolverKind::Banded)?;
        let mut x = rhs.clone();
        banded.solve_free_in_place(&mut x, 1);
        let y = dense::solve_free(&op, &rhs).ok_or(crate::Error::Degenerate("singular".into()))?;
        Ok(max_diff(&x, &y))
    };
    match run() {
        Ok(v) => check("banded solve matches dense LU", v, 1e-10),
        Err(e) => failed("banded solve matches dense LU", e),
    }
}

fn affine_is_harmonic() -> SelfCheck {
    let region = MeshRegion::new(2, 5, [4, 6], [20, 18]);
    let affine: Vec<f64> = (0..region.num_nodes())
        .map(|n| {
            let x = region.node_coords(n);
            1.0 + 2.0 * x[0] - 3.0 * x[1]
        })
        .collect();
    let kinds = region.node_kinds();
    let boundary: Vec<f64> = affine
        .iter()
        .zip(&kinds)
        .map(|(v, k)| if *k == NodeKind::Free { 0.0 } else { *v })
        .collect();
    match harmonic_extension(&region, &vec![0.7; region.num_cells()], &boundary) {
        Ok(u) => {
            let interior: Vec<(f64, f64)> = u
                .values
                .iter()
                .zip(&affine)
                .zip(&kinds)
                .filter(|(_, k)| **k == NodeKind::Free)
                .map(|((a, b), _)| (*a, *b))
                .collect();
            let err = interior.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            check("affine data extends to itself", err, 1e-12)
        }
        Err(e) => failed("affine data extends to itself", e),
    }
}

fn hat_norms() -> SelfCheck {
    let region = MeshRegion::new(1, 2, [0, 0], [4, 1]);
    let f = FineFunction::new(region, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    let n = norms(&f);
    let err = (n.l2 * n.l2 - 1.0 / 6.0).abs().max((n.h1semi * n.h1semi - 8.0).abs());
    check("hat function norms", err, 1e-14)
}

fn saddle_point_vs_kkt() -> SelfCheck {
    let run = || -> crate::Result<f64> {
        let spec = GridSpec::new(1, 3, 4, 6)?;
        let patch = spec.patch(3, 2)?;
        let region = patch.region();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let problem = LocalProblem::assemble(&region, &random_coeff(region.num_cells(), &mut rng))?;
        let b = ConstraintMatrix::new(problem.operator(), spec.log(Level::Coarse))?;
        let bub = bubble(&spec, patch.center())?.embed(&region);
        let c = lod_correction(&problem, &b, &bub)?;
        let op = problem.operator();
        let rhs = op.apply_free(&op.gather(&bub));
        let (x, p) = dense::solve_kkt(op, &b, &rhs).ok_or(crate::Error::Degenerate("singular".into()))?;
        let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        Ok(max_diff(&op.gather(&c.correction), &x).max(max_diff(&c.multipliers, &p) / scale))
    };
    match run() {
        Ok(v) => check("saddle point matches dense KKT", v, 1e-9),
        Err(e) => failed("saddle point matches dense KKT", e),
    }
}

fn riesz_identity() -> SelfCheck {
    match crb_from_gram(&DMatrix::identity(4, 4)) {
        Ok(c) => check("identity Gram has unit Riesz constant", (c - 1.0).abs(), 1e-14),
        Err(e) => failed("identity Gram has unit Riesz constant", e),
    }
}

fn golden_ratio() -> SelfCheck {
    let phi = generalized_golden_ratio(1);
    check("R_1 generator is the golden ratio", (phi - (1.0 + 5f64.sqrt()) / 2.0).abs(), 1e-14)
}

fn small_model() -> SelfCheck {
    let run = || -> crate::Result<f64> {
        let spec = GridSpec::new(1, 2, 3, 5)?;
        let cfg = SamplingConfig { samples: 20, ..SamplingConfig::default() };
        let model = build_model(&spec, 1, &FieldLaw::default(), &cfg, &ModelOptions::default(), 0)?;
        compute_crb(&model)?;
        let f = P0Function::new(1, 2, vec![1.0; 4]);
        Ok(assemble_coarse_solution(&model, &f)?.expansion_residual)
    };
    match run() {
        Ok(v) => check("small 1D model expands the right-hand side", v, 1e-8),
        Err(e) => failed("small 1D model expands the right-hand side", e),
    }
}

/// Runs every check.
pub fn selftest() -> Vec<SelfCheck> {
    vec![
        banded_vs_dense(),
        affine_is_harmonic(),
        hat_norms(),
        saddle_point_vs_kkt(),
        riesz_identity(),
        golden_ratio(),
        small_model(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
