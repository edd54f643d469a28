//! The `R_d` Kronecker sequence.
//!
//! Point `n >= 1` has coordinates `frac(1/2 + n * alpha_j)` with
//! `alpha_j = phi_d^-(j+1)`, where `phi_d` is the unique positive root of
//! `x^(d+1) = x + 1` (the generalized golden ratio). Unlike Sobol' or Halton
//! constructions it needs no direction-number or prime tables, so any
//! dimension is available, which matters for one coefficient value per
//! `eps`-cell.

/// Generalized golden ratio `phi_d`.
pub fn generalized_golden_ratio(dim: usize) -> f64 {
    let e = 1.0 / (dim as f64 + 1.0);
    let mut x = 2.0f64;
    for _ in 0..200 {
        let next = (1.0 + x).powf(e);
        if next == x {
            break;
        }
        x = next;
    }
    x
}

#[derive(Clone, Debug)]
pub struct RdSequence {
    alpha: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "R_d needs at least one dimension");
        let g = generalized_golden_ratio(dim);
        let alpha = (1..=dim).map(|j| g.powi(-(j as i32)).fract()).collect();
        RdSequence { alpha }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// The `n`-th point, `n >= 1`.
    pub fn point(&self, n: u64) -> Vec<f64> {
        let nf = n as f64;
        self.alpha.iter().map(|a| (0.5 + nf * a).fract()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratios() {
        // phi_1 is the golden ratio, phi_2 the plastic number.
        assert!((generalized_golden_ratio(1) - 1.618_033_988_749_895).abs() < 1e-15);
        assert!((generalized_golden_ratio(2) - 1.324_717_957_244_746).abs() < 1e-15);
    }

    #[test]
    fn points_in_unit_cube() {
        let s = RdSequence::new(16);
        for n in 1..500 {
            assert!(s.point(n).iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }
}
