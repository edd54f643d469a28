//! Q1 finite elements on a box of fine cells with a cellwise constant scalar
//! coefficient.
//!
//! Unknowns are the free (interior) nodes of a [`MeshRegion`]. Nodal vectors
//! always cover every node of the region; Dirichlet rows carry the imposed
//! values. Multi-column data is stored row-major as `nodes x m`.

mod banded;
pub mod dense;
mod element;

pub use banded::{BandCholesky, SymBand};

use crate::error::{Error, Result};
use crate::grid::{MeshRegion, NodeKind};
use nalgebra::{DMatrix, DVector};

const NONE: usize = usize::MAX;

/// Nodal values of a Q1 function on a region.
#[derive(Clone, Debug, PartialEq)]
pub struct FineFunction {
    pub region: MeshRegion,
    pub values: Vec<f64>,
}

impl FineFunction {
    pub fn new(region: MeshRegion, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), region.num_nodes(), "nodal vector length");
        FineFunction { region, values }
    }

    pub fn zeros(region: MeshRegion) -> Self {
        let n = region.num_nodes();
        FineFunction::new(region, vec![0.0; n])
    }

    pub fn node_kinds(&self) -> Vec<NodeKind> {
        self.region.node_kinds()
    }

    /// Element averages at level `log`.
    pub fn element_averages(&self, log: u32) -> Result<Vec<f64>> {
        self.region.element_averages(&self.values, log)
    }
}

/// Stiffness matrix over the free nodes of a region.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    region: MeshRegion,
    coeff: Vec<f64>,
    dof_of_node: Vec<usize>,
    node_of_dof: Vec<usize>,
    trace: Vec<bool>,
    boundary_cells: Vec<usize>,
    matrix: SymBand,
}

/// Free-node numbering with the shorter interior axis running fastest, so the
/// half bandwidth is that axis length plus one.
fn number_dofs(region: &MeshRegion) -> (Vec<usize>, Vec<usize>, usize) {
    let n = region.nodes_per_axis();
    let mut dof_of_node = vec![NONE; region.num_nodes()];
    if region.dim() == 1 {
        let m = n[0].saturating_sub(2);
        let mut node_of_dof = Vec::with_capacity(m);
        for i in 1..=m {
            dof_of_node[i] = i - 1;
            node_of_dof.push(i);
        }
        return (dof_of_node, node_of_dof, 1);
    }
    let m0 = n[0].saturating_sub(2);
    let m1 = n[1].saturating_sub(2);
    let mut node_of_dof = vec![0; m0 * m1];
    let (fast_is_1, fast) = if m1 <= m0 { (true, m1) } else { (false, m0) };
    for i in 0..m0 {
        for j in 0..m1 {
            let dof = if fast_is_1 { i * m1 + j } else { j * m0 + i };
            let node = region.node_index([i + 1, j + 1]);
            dof_of_node[node] = dof;
            node_of_dof[dof] = node;
        }
    }
    (dof_of_node, node_of_dof, fast + 1)
}

/// Assembles `(a grad u, grad v)` over the region from one coefficient value
/// per fine cell (region-local cell order).
pub fn assemble_stiffness(region: &MeshRegion, coeff: &[f64]) -> Result<SparseOperator> {
    assert_eq!(coeff.len(), region.num_cells(), "one coefficient per fine cell");
    if let Some((cell, &value)) = coeff.iter().enumerate().find(|(_, a)| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::NonPositiveCoefficient { cell, value });
    }
    let (dof_of_node, node_of_dof, bw) = number_dofs(region);
    let n = node_of_dof.len();
    let bw = bw.min(n.saturating_sub(1));
    let d = region.dim();
    let k = element::stiffness(d, region.h());
    let mut matrix = SymBand::zeros(n, bw);
    let mut boundary_cells = Vec::new();
    for (cell, &a) in coeff.iter().enumerate() {
        let (nodes, nn) = region.cell_nodes(cell);
        let dofs: [usize; 4] = std::array::from_fn(|i| if i < nn { dof_of_node[nodes[i]] } else { NONE });
        if dofs[..nn].contains(&NONE) {
            boundary_cells.push(cell);
        }
        for i in 0..nn {
            if dofs[i] == NONE {
                continue;
            }
            for j in 0..=i {
                if dofs[j] != NONE {
                    matrix.add(dofs[i], dofs[j], a * k[i][j]);
                }
            }
        }
    }
    Ok(SparseOperator {
        region: region.clone(),
        coeff: coeff.to_vec(),
        dof_of_node,
        node_of_dof,
        trace: region.node_kinds().into_iter().map(|k| k == NodeKind::Trace).collect(),
        boundary_cells,
        matrix,
    })
}

impl SparseOperator {
    pub fn region(&self) -> &MeshRegion {
        &self.region
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeff
    }

    pub fn num_free(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        match self.dof_of_node[node] {
            NONE => None,
            d => Some(d),
        }
    }

    pub fn node_of_dof(&self) -> &[usize] {
        &self.node_of_dof
    }

    pub fn matrix(&self) -> &SymBand {
        &self.matrix
    }

    /// Free entries of a nodal vector.
    pub fn gather(&self, nodal: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&n| nodal[n]).collect()
    }

    /// Nodal vector with the given free values and zero elsewhere.
    pub fn scatter(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.region.num_nodes()];
        for (&n, &v) in self.node_of_dof.iter().zip(free) {
            out[n] = v;
        }
        out
    }

    /// Matrix-free product of the full (unconstrained) stiffness matrix with
    /// a nodal vector; every node, Dirichlet or not, gets its row.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.region.num_nodes(), "nodal vector length");
        let k = element::stiffness(self.region.dim(), self.region.h());
        let mut out = vec![0.0; u.len()];
        for (cell, &a) in self.coeff.iter().enumerate() {
            let (nodes, nn) = self.region.cell_nodes(cell);
            for i in 0..nn {
                let s: f64 = (0..nn).map(|j| k[i][j] * u[nodes[j]]).sum();
                out[nodes[i]] += a * s;
            }
        }
        out
    }

    /// Product of the free-free block with a free vector.
    pub fn apply_free(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// `-A_IB u_B` on the free rows for `m` nodal columns, where only the
    /// trace rows of `u` are read (Γ rows count as zero).
    fn boundary_coupling(&self, u: &[f64], m: usize) -> Vec<f64> {
        let k = element::stiffness(self.region.dim(), self.region.h());
        let mut rhs = vec![0.0; self.num_free() * m];
        for &cell in &self.boundary_cells {
            let a = self.coeff[cell];
            let (nodes, nn) = self.region.cell_nodes(cell);
            for i in 0..nn {
                let di = self.dof_of_node[nodes[i]];
                if di == NONE {
                    continue;
                }
                let dst = &mut rhs[di * m..(di + 1) * m];
                for j in 0..nn {
                    if !self.trace[nodes[j]] {
                        continue;
                    }
                    let c = a * k[i][j];
                    let src = &u[nodes[j] * m..(nodes[j] + 1) * m];
                    for (r, s) in dst.iter_mut().zip(src) {
                        *r -= c * s;
                    }
                }
            }
        }
        rhs
    }

    /// Dense free-free block for oracle comparisons.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_free();
        DMatrix::from_fn(n, n, |i, j| self.matrix.get(i, j))
    }
}

/// Direct solver used for the free-free block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverKind {
    #[default]
    Banded,
    Dense,
}

#[derive(Clone, Debug)]
enum Factor {
    Banded(BandCholesky),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

/// An assembled operator together with its factorization.
#[derive(Clone, Debug)]
pub struct LocalProblem {
    op: SparseOperator,
    factor: Factor,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl LocalProblem {
    pub fn new(op: SparseOperator) -> Result<Self> {
        Self::with_solver(op, SolverKind::Banded)
    }

    pub fn with_solver(op: SparseOperator, kind: SolverKind) -> Result<Self> {
        let factor = match kind {
            SolverKind::Banded => Factor::Banded(op.matrix.factor()?),
            SolverKind::Dense => {
                let a = op.to_dense();
                let chol = nalgebra::Cholesky::new(a).ok_or(Error::NotPositiveDefinite {
                    pivot: 0,
                    value: f64::NAN,
                })?;
                Factor::Dense(chol)
            }
        };
        Ok(LocalProblem { op, factor })
    }

    pub fn assemble(region: &MeshRegion, coeff: &[f64]) -> Result<Self> {
        Self::new(assemble_stiffness(region, coeff)?)
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn region(&self) -> &MeshRegion {
        &self.op.region
    }

    /// Solves the free-free system for `nrhs` row-major right-hand sides.
    pub fn solve_free_in_place(&self, rhs: &mut [f64], nrhs: usize) {
        match &self.factor {
            Factor::Banded(f) => f.solve_in_place(rhs, nrhs),
            Factor::Dense(c) => {
                let n = self.op.num_free();
                let mut b = DMatrix::from_row_slice(n, nrhs, rhs);
                c.solve_mut(&mut b);
                for i in 0..n {
                    for j in 0..nrhs {
                        rhs[i * nrhs + j] = b[(i, j)];
                    }
                }
            }
        }
    }

    fn check_residual(&self, x: &[f64], rhs: &[f64], load_norm: f64) -> Result<()> {
        let ax = self.op.apply_free(x);
        let residual = max_abs(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
        let tolerance = 1e-10 * (1.0 + load_norm);
        if residual.is_finite() && residual <= tolerance {
            Ok(())
        } else {
            Err(Error::Residual { residual, tolerance })
        }
    }

    /// Homogeneous Dirichlet solve for a nodal load vector (only free rows
    /// are read).
    pub fn solve(&self, load: &[f64]) -> Result<FineFunction> {
        let rhs = self.op.gather(load);
        let mut x = rhs.clone();
        self.solve_free_in_place(&mut x, 1);
        self.check_residual(&x, &rhs, max_abs(&rhs))?;
        Ok(FineFunction::new(self.op.region.clone(), self.op.scatter(&x)))
    }

    /// A-harmonic extension of `m` columns of Dirichlet data (`nodes x m`,
    /// only non-free rows are read; Γ rows are forced to zero). Returns all
    /// nodal columns without a residual check.
    pub fn extend_many(&self, boundary: &[f64], m: usize) -> Vec<f64> {
        let nn = self.op.region.num_nodes();
        assert_eq!(boundary.len(), nn * m, "boundary data shape");
        let mut x = self.op.boundary_coupling(boundary, m);
        self.solve_free_in_place(&mut x, m);
        let mut out = vec![0.0; nn * m];
        for node in 0..nn {
            let dst = &mut out[node * m..(node + 1) * m];
            match self.op.dof_of_node[node] {
                NONE => {
                    if self.op.trace[node] {
                        dst.copy_from_slice(&boundary[node * m..(node + 1) * m]);
                    }
                }
                d => dst.copy_from_slice(&x[d * m..(d + 1) * m]),
            }
        }
        out
    }

    /// A-harmonic extension of nodal Dirichlet data with a residual check on
    /// the free rows.
    pub fn extend(&self, boundary: &[f64]) -> Result<FineFunction> {
        let u = self.extend_many(boundary, 1);
        let r = self.op.apply(&u);
        let residual = self.op.node_of_dof.iter().map(|&n| r[n].abs()).fold(0.0, f64::max);
        let tolerance = 1e-10 * (1.0 + max_abs(&u));
        if !(residual <= tolerance) {
            return Err(Error::Residual { residual, tolerance });
        }
        Ok(FineFunction::new(self.op.region.clone(), u))
    }
}

/// Homogeneous Dirichlet solve `A u = load` on the free nodes.
pub fn solve_dirichlet(op: &SparseOperator, load: &[f64]) -> Result<FineFunction> {
    LocalProblem::new(op.clone())?.solve(load)
}

/// A-harmonic extension into the region of nodal boundary data.
pub fn harmonic_extension(region: &MeshRegion, coeff: &[f64], boundary: &[f64]) -> Result<FineFunction> {
    LocalProblem::assemble(region, coeff)?.extend(boundary)
}

/// Exact load `(g, phi_i)` for `g` piecewise constant on the level-`log`
/// elements of the region (region-local lexicographic element order).
pub fn assemble_load_p0(region: &MeshRegion, log: u32, g: &[f64]) -> Result<Vec<f64>> {
    let elems = region.elements_per_axis(log)?;
    assert_eq!(g.len(), elems[0] * elems[1], "one value per element");
    let r = 1usize << (region.log_fine() - log);
    let share = region.h().powi(region.dim() as i32) / (1usize << region.dim()) as f64;
    let mut load = vec![0.0; region.num_nodes()];
    for cell in 0..region.num_cells() {
        let v = g[region.element_of_cell(cell, r, elems)] * share;
        if v == 0.0 {
            continue;
        }
        let (nodes, nn) = region.cell_nodes(cell);
        for &n in &nodes[..nn] {
            load[n] += v;
        }
    }
    Ok(load)
}

/// Load for a smooth `f` by the tensor midpoint rule on each fine cell.
pub fn assemble_load_fn(region: &MeshRegion, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let share = region.h().powi(region.dim() as i32) / (1usize << region.dim()) as f64;
    let mut load = vec![0.0; region.num_nodes()];
    for cell in 0..region.num_cells() {
        let v = f(region.cell_midpoint(cell)) * share;
        let (nodes, nn) = region.cell_nodes(cell);
        for &n in &nodes[..nn] {
            load[n] += v;
        }
    }
    load
}

/// Squared `L^2` norm and squared `H^1` seminorm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1semi: f64,
}

/// `L^2` norm and `H^1` seminorm by the exact Q1 mass and stiffness forms.
pub fn norms(f: &FineFunction) -> Norms {
    let (l2, h1) = squared_norms_many(&f.region, &f.values, 1)[0];
    Norms {
        l2: l2.sqrt(),
        h1semi: h1.sqrt(),
    }
}

/// Squared `(L^2, H^1-seminorm)` pairs of `m` nodal columns.
pub fn squared_norms_many(region: &MeshRegion, u: &[f64], m: usize) -> Vec<(f64, f64)> {
    assert_eq!(u.len(), region.num_nodes() * m, "nodal data shape");
    let d = region.dim();
    let k = element::stiffness(d, region.h());
    let mm = element::mass(d, region.h());
    let mut l2 = vec![0.0; m];
    let mut h1 = vec![0.0; m];
    for cell in 0..region.num_cells() {
        let (nodes, nn) = region.cell_nodes(cell);
        for i in 0..nn {
            let ui = &u[nodes[i] * m..(nodes[i] + 1) * m];
            for j in 0..nn {
                let uj = &u[nodes[j] * m..(nodes[j] + 1) * m];
                let (kij, mij) = (k[i][j], mm[i][j]);
                for c in 0..m {
                    let p = ui[c] * uj[c];
                    l2[c] += mij * p;
                    h1[c] += kij * p;
                }
            }
        }
    }
    l2.into_iter().zip(h1).collect()
}

/// Level-`log` element averages of `m` nodal columns, returned as
/// `elements x m`.
pub fn element_averages_many(region: &MeshRegion, u: &[f64], m: usize, log: u32) -> Result<Vec<f64>> {
    assert_eq!(u.len(), region.num_nodes() * m, "nodal data shape");
    let elems = region.elements_per_axis(log)?;
    let r = 1usize << (region.log_fine() - log);
    let mut out = vec![0.0; elems[0] * elems[1] * m];
    let scale = 1.0 / ((1usize << region.dim()) as f64 * r.pow(region.dim() as u32) as f64);
    for cell in 0..region.num_cells() {
        let e = region.element_of_cell(cell, r, elems);
        let (nodes, nn) = region.cell_nodes(cell);
        let dst = &mut out[e * m..(e + 1) * m];
        for &n in &nodes[..nn] {
            for (o, v) in dst.iter_mut().zip(&u[n * m..(n + 1) * m]) {
                *o += v;
            }
        }
    }
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

/// Rows `(1/|K|) ∫_K phi_i` over the free nodes, one per level-`log` element
/// of the region, so that `B v` is the vector of element averages of `v`.
#[derive(Clone, Debug)]
pub struct ConstraintMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConstraintMatrix {
    pub fn new(op: &SparseOperator, log: u32) -> Result<Self> {
        let region = op.region();
        let elems = region.elements_per_axis(log)?;
        let r = 1usize << (region.log_fine() - log);
        let rows = elems[0] * elems[1];
        let cols = op.num_free();
        let mut data = vec![0.0; rows * cols];
        let share = 1.0 / ((1usize << region.dim()) as f64 * r.pow(region.dim() as u32) as f64);
        for cell in 0..region.num_cells() {
            let e = region.element_of_cell(cell, r, elems);
            let (nodes, nn) = region.cell_nodes(cell);
            for &n in &nodes[..nn] {
                if let Some(dof) = op.dof_of_node(n) {
                    data[e * cols + dof] += share;
                }
            }
        }
        Ok(ConstraintMatrix { rows, cols, data })
    }

    /// No constraints.
    pub fn empty(op: &SparseOperator) -> Self {
        ConstraintMatrix {
            rows: 0,
            cols: op.num_free(),
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|k| self.row(k).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn apply_transpose(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (k, &pk) in p.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(k)) {
                *o += a * pk;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Solves `[A B^T; B 0] [x; p] = [rhs; 0]` on the free nodes by the Schur
/// complement `S = B A^-1 B^T`. Returns `(x, p)`.
pub fn solve_saddle_point(problem: &LocalProblem, b: &ConstraintMatrix, rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = problem.op.num_free();
    assert_eq!(rhs.len(), n, "free right-hand side length");
    assert_eq!(b.cols(), n, "constraint width");
    let nr = b.rows();
    let mut x0 = rhs.to_vec();
    problem.solve_free_in_place(&mut x0, 1);
    if nr == 0 {
        problem.check_residual(&x0, rhs, max_abs(rhs))?;
        return Ok((x0, Vec::new()));
    }
    let mut y = vec![0.0; n * nr];
    for k in 0..nr {
        for (i, v) in b.row(k).iter().enumerate() {
            y[i * nr + k] = *v;
        }
    }
    problem.solve_free_in_place(&mut y, nr);
    let mut s = DMatrix::zeros(nr, nr);
    for k in 0..nr {
        let row = b.row(k);
        for l in 0..=k {
            let v: f64 = row.iter().enumerate().map(|(i, a)| a * y[i * nr + l]).sum();
            s[(k, l)] = v;
            s[(l, k)] = v;
        }
    }
    let eig = s.clone().symmetric_eigen();
    let lmin = eig.eigenvalues.min();
    let rel = lmin / eig.eigenvalues.amax();
    if !(rel > 1e-12) {
        return Err(Error::RankDeficient { pivot: rel });
    }
    let chol = nalgebra::Cholesky::new(s).ok_or(Error::RankDeficient { pivot: rel })?;
    let p = chol.solve(&DVector::from_vec(b.apply(&x0)));
    let p: Vec<f64> = p.iter().copied().collect();
    let mut x = x0.clone();
    for (i, xi) in x.iter_mut().enumerate() {
        let yi = &y[i * nr..(i + 1) * nr];
        *xi -= yi.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
    }

    let ax = problem.op.apply_free(&x);
    let btp = b.apply_transpose(&p);
    let r1 = max_abs(&(0..n).map(|i| ax[i] + btp[i] - rhs[i]).collect::<Vec<_>>());
    let scale1 = max_abs(rhs).max(max_abs(&btp));
    let r2 = max_abs(&b.apply(&x));
    let scale2 = max_abs(&x0);
    if !(r1 <= 1e-8 * scale1) {
        return Err(Error::Residual { residual: r1, tolerance: 1e-8 * scale1 });
    }
    if !(r2 <= 1e-8 * scale2) {
        return Err(Error::Residual { residual: r2, tolerance: 1e-8 * scale2 });
    }
    Ok((x, p))
}
