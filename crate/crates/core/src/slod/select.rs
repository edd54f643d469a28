//! Stabilized choice of the local source term from the Gram spectrum.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Which end of the weighted spectrum is selected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Smallest weighted norm: mass concentrates where the weight vanishes.
    #[default]
    Minimize,
    Maximize,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Minimize => "minimize",
            Objective::Maximize => "maximize",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimize" => Ok(Objective::Minimize),
            "maximize" => Ok(Objective::Maximize),
            _ => Err(Error::Config(format!("unknown objective direction '{s}'"))),
        }
    }
}

/// Eigenpairs of a symmetric Gram matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct GramEigen {
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl GramEigen {
    pub fn new(gram: &DMatrix<f64>) -> Self {
        let e = gram.clone().symmetric_eigen();
        let n = gram.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        // Stable sort keeps the solver order among exact ties.
        order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
        let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
        GramEigen { values, vectors }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Singular values `sqrt(max(lambda, 0))`, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Thresholding and weighting parameters of the selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionRule {
    pub p: f64,
    pub floor: f64,
    pub objective: Objective,
}

/// Result of the selection in `sqrt|K|`-scaled coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Unit Euclidean vector, positive at the center element.
    pub coords: Vec<f64>,
    /// Candidate indices (0-based, descending singular value order).
    pub candidates: Vec<usize>,
    /// Weighted objective `g^T W g` of the selected vector.
    pub weighted: f64,
}

/// Indices `i` with `sigma_i / sigma_1 <= max((sigma_N / sigma_1)^(1/p), floor)`.
pub fn candidate_set(sigma: &[f64], p: f64, floor: f64) -> Vec<usize> {
    let n = sigma.len();
    if n == 0 || sigma[0] <= 0.0 {
        return Vec::new();
    }
    let s1 = sigma[0];
    let threshold = (sigma[n - 1] / s1).powf(1.0 / p).max(floor);
    let set: Vec<usize> = (0..n).filter(|&i| sigma[i] / s1 <= threshold).collect();
    if set.is_empty() {
        vec![n - 1]
    } else {
        set
    }
}

/// Optimizes `c^T U_I^T W U_I c` subject to `c^T U_I^T U_I c = 1` over the
/// candidate eigenvectors `U_I`, reduced to a standard eigenproblem through
/// the Cholesky factor of `U_I^T U_I`.
pub fn select_source_term(
    eig: &GramEigen,
    weights: &[f64],
    center: usize,
    rule: &SelectionRule,
) -> Result<Selection> {
    let n = eig.len();
    assert_eq!(weights.len(), n, "one weight per patch element");
    if n == 0 || !(eig.values[0] > 0.0) {
        return Err(Error::Degenerate("Gram matrix has no positive eigenvalue".into()));
    }
    let candidates = candidate_set(&eig.singular_values(), rule.p, rule.floor);
    let q = candidates.len();
    let u = DMatrix::from_fn(n, q, |i, j| eig.vectors[(i, candidates[j])]);
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    let mass = u.transpose() * &u;
    let weighted = u.transpose() * &w * &u;
    let chol = nalgebra::Cholesky::new(mass)
        .ok_or_else(|| Error::Degenerate("candidate vectors are linearly dependent".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular candidate mass".into()))?;
    let mut c = &linv * weighted * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let ce = c.symmetric_eigen();
    let target = match rule.objective {
        Objective::Minimize => ce.eigenvalues.min(),
        Objective::Maximize => ce.eigenvalues.max(),
    };
    let scale = ce.eigenvalues.amax().max(1.0);
    let tied: Vec<usize> = (0..q)
        .filter(|&k| (ce.eigenvalues[k] - target).abs() <= 1e-12 * scale)
        .collect();
    // Within a (possibly multiple) optimal eigenspace, take the projection of
    // the lowest-index candidate that has a nonzero component in it.
    let mut y = DVector::zeros(q);
    for j in 0..q {
        let mut proj = DVector::zeros(q);
        for &k in &tied {
            let v = ce.eigenvectors.column(k);
            proj += v * v[j];
        }
        if proj.norm() > 1e-8 {
            y = proj;
            break;
        }
    }
    let cvec = linv.transpose() * y;
    let mut g = &u * cvec;
    let norm = g.norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("selected source term vanishes".into()));
    }
    g /= norm;
    let pivot = if g[center].abs() > 1e-14 {
        center
    } else {
        g.iamax()
    };
    if g[pivot] < 0.0 {
        g = -g;
    }
    let weighted = g.iter().zip(weights).map(|(a, w)| w * a * a).sum();
    Ok(Selection {
        coords: g.iter().copied().collect(),
        candidates,
        weighted,
    })
}
