//! Dense direct solves of the same discrete systems, built from scratch with
//! nalgebra. Intended as an oracle for small problems.

use super::{ConstraintMatrix, SparseOperator};
use nalgebra::{DMatrix, DVector};

/// Solves the free-free system with a dense LU factorization.
pub fn solve_free(op: &SparseOperator, rhs: &[f64]) -> Option<Vec<f64>> {
    let x = op.to_dense().lu().solve(&DVector::from_column_slice(rhs))?;
    Some(x.iter().copied().collect())
}

/// Harmonic extension through the dense Schur system
/// `A_II u_I = -A_IB u_B`, with `A_IB` taken from the full assembled matrix.
pub fn extend(op: &SparseOperator, boundary: &[f64]) -> Option<Vec<f64>> {
    let region = op.region();
    let nn = region.num_nodes();
    let full = full_matrix(op);
    let kinds = region.node_kinds();
    let mut b = boundary.to_vec();
    for (v, k) in b.iter_mut().zip(&kinds) {
        if *k != crate::grid::NodeKind::Trace {
            *v = 0.0;
        }
    }
    let free = op.node_of_dof();
    let rhs: Vec<f64> = free
        .iter()
        .map(|&i| -(0..nn).filter(|&j| op.dof_of_node(j).is_none()).map(|j| full[(i, j)] * b[j]).sum::<f64>())
        .collect();
    let x = solve_free(op, &rhs)?;
    for (&n, v) in free.iter().zip(x) {
        b[n] = v;
    }
    Some(b)
}

/// The full stiffness matrix over every node of the region, by dense
/// application of the operator to unit vectors.
pub fn full_matrix(op: &SparseOperator) -> DMatrix<f64> {
    let nn = op.region().num_nodes();
    let mut m = DMatrix::zeros(nn, nn);
    let mut e = vec![0.0; nn];
    for j in 0..nn {
        e[j] = 1.0;
        let col = op.apply(&e);
        for i in 0..nn {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// Solves the full KKT system `[A B^T; B 0]` densely. Returns `(x, p)`.
pub fn solve_kkt(op: &SparseOperator, b: &ConstraintMatrix, rhs: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = op.num_free();
    let k = b.rows();
    let a = op.to_dense();
    let bm = b.to_dense();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&a);
    kkt.view_mut((n, 0), (k, n)).copy_from(&bm);
    kkt.view_mut((0, n), (n, k)).copy_from(&bm.transpose());
    let mut r = DVector::zeros(n + k);
    r.rows_mut(0, n).copy_from_slice(rhs);
    let sol = kkt.lu().solve(&r)?;
    Some((sol.rows(0, n).iter().copied().collect(), sol.rows(n, k).iter().copied().collect()))
}
