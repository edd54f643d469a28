//! Closed-form Q1 element matrices on square cells.
//!
//! 2D local node order is `(0,0), (1,0), (1,1), (0,1)`; nodes `i` and `j`
//! share an edge unless `|i - j| == 2`.

/// Stiffness matrix of `∫ ∇φ_i · ∇φ_j` for a unit coefficient.
pub(crate) fn stiffness(d: usize, h: f64) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    if d == 1 {
        let s = 1.0 / h;
        k[0][0] = s;
        k[1][1] = s;
        k[0][1] = -s;
        k[1][0] = -s;
    } else {
        for (i, row) in k.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = match i.abs_diff(j) {
                    0 => 4.0 / 6.0,
                    2 => -2.0 / 6.0,
                    _ => -1.0 / 6.0,
                };
            }
        }
    }
    k
}

/// Mass matrix of `∫ φ_i φ_j`.
pub(crate) fn mass(d: usize, h: f64) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    if d == 1 {
        let s = h / 6.0;
        m[0][0] = 2.0 * s;
        m[1][1] = 2.0 * s;
        m[0][1] = s;
        m[1][0] = s;
    } else {
        let s = h * h / 36.0;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = s * match i.abs_diff(j) {
                    0 => 4.0,
                    2 => 1.0,
                    _ => 2.0,
                };
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sum_to_zero_and_mass_to_area() {
        for d in 1..=2 {
            let n = 1 << d;
            let h = 0.25;
            let k = stiffness(d, h);
            let m = mass(d, h);
            for i in 0..n {
                assert!(k[i][..n].iter().sum::<f64>().abs() < 1e-15);
            }
            let total: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[i][j]).sum();
            assert!((total - h.powi(d as i32)).abs() < 1e-15);
        }
    }
}
