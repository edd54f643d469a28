//! Dyadic Cartesian mesh hierarchy on the unit box.
//!
//! Three nested uniform meshes share the domain `(0,1)^d`: the coarse mesh
//! (side `H = 2^-log_coarse`), the coefficient mesh (side `eps`) and the fine
//! mesh (side `h`). All element and node multi-indices are 0-based; linear
//! indices are lexicographic with axis 0 most significant.

use crate::error::{Error, Result};

/// A mesh level of the hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Coarse,
    Eps,
    Fine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    d: usize,
    log_coarse: u32,
    log_eps: u32,
    log_fine: u32,
}

/// Largest supported `log2` of the number of cells per axis.
const MAX_LOG: u32 = 14;

impl GridSpec {
    pub fn new(d: usize, log_coarse: u32, log_eps: u32, log_fine: u32) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {d}")));
        }
        if log_coarse < 1 {
            return Err(Error::Config("log_coarse must be at least 1".into()));
        }
        if !(log_coarse <= log_eps && log_eps <= log_fine) {
            return Err(Error::Config(format!(
                "mesh levels must nest as H >= eps >= h, got log2 sizes \
                 ({log_coarse}, {log_eps}, {log_fine})"
            )));
        }
        if log_fine > MAX_LOG {
            return Err(Error::Config(format!("log_fine {log_fine} exceeds {MAX_LOG}")));
        }
        Ok(GridSpec {
            d,
            log_coarse,
            log_eps,
            log_fine,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn log(&self, level: Level) -> u32 {
        match level {
            Level::Coarse => self.log_coarse,
            Level::Eps => self.log_eps,
            Level::Fine => self.log_fine,
        }
    }

    /// Element side length of a level.
    pub fn size(&self, level: Level) -> f64 {
        (-(self.log(level) as f64)).exp2()
    }

    pub fn per_axis(&self, level: Level) -> usize {
        1 << self.log(level)
    }

    pub fn count(&self, level: Level) -> usize {
        self.per_axis(level).pow(self.d as u32)
    }

    /// Number of `finer` elements per axis inside one `coarser` element.
    pub fn ratio(&self, coarser: Level, finer: Level) -> usize {
        1 << (self.log(finer) - self.log(coarser))
    }

    pub fn element(&self, level: Level, linear: usize) -> ElementIndex {
        ElementIndex::from_linear(level, self.d, self.per_axis(level), linear)
    }

    pub fn linear(&self, e: &ElementIndex) -> usize {
        e.linear(self.d, self.per_axis(e.level))
    }

    /// The fine mesh region covering the whole domain.
    pub fn domain_region(&self) -> MeshRegion {
        let n = self.per_axis(Level::Fine);
        MeshRegion::new(self.d, self.log_fine, [0, 0], [n, if self.d == 2 { n } else { 0 }])
    }

    /// The `ell`-th order patch `N^ell(T)` around coarse element `center`.
    pub fn patch(&self, center: usize, ell: usize) -> Result<Patch> {
        Patch::new(self, center, ell)
    }

    /// True when every patch of order `ell` is a proper subset of the domain.
    pub fn admits_ell(&self, ell: usize) -> bool {
        self.per_axis(Level::Coarse) > 2 * ell + 1
    }
}

/// Multi-index of an element at a named level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ElementIndex {
    pub level: Level,
    pub idx: [usize; 2],
}

impl ElementIndex {
    fn from_linear(level: Level, d: usize, n: usize, linear: usize) -> Self {
        let idx = if d == 1 { [linear, 0] } else { [linear / n, linear % n] };
        ElementIndex { level, idx }
    }

    fn linear(&self, d: usize, n: usize) -> usize {
        if d == 1 {
            self.idx[0]
        } else {
            self.idx[0] * n + self.idx[1]
        }
    }
}

/// Shape of a patch relative to its center: element offsets on each side and
/// whether that side lies on the domain boundary. Patches with equal keys are
/// translates of each other, including their boundary classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeKey {
    pub below: [usize; 2],
    pub above: [usize; 2],
    pub touch_below: [bool; 2],
    pub touch_above: [bool; 2],
}

impl ShapeKey {
    /// Stable numeric code, used to key random streams shared by translates.
    pub fn code(&self) -> u64 {
        let mut c = 0u64;
        for k in 0..2 {
            c = c * 64 + self.below[k] as u64;
            c = c * 64 + self.above[k] as u64;
            c = c * 2 + self.touch_below[k] as u64;
            c = c * 2 + self.touch_above[k] as u64;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    d: usize,
    log_coarse: u32,
    log_fine: u32,
    center: usize,
    center_idx: [usize; 2],
    ell: usize,
    lo: [usize; 2],
    hi: [usize; 2],
    elements: Vec<usize>,
}

impl Patch {
    fn new(spec: &GridSpec, center: usize, ell: usize) -> Result<Self> {
        let d = spec.dim();
        let n = spec.per_axis(Level::Coarse);
        if center >= spec.count(Level::Coarse) {
            return Err(Error::Config(format!("coarse element {center} out of range")));
        }
        if ell < 1 {
            return Err(Error::Config("oversampling order ell must be at least 1".into()));
        }
        let c = spec.element(Level::Coarse, center).idx;
        // N^1 of a box of elements is the box grown by one layer, clipped.
        let mut lo = c;
        let mut hi = c;
        for _ in 0..ell {
            for k in 0..d {
                lo[k] = lo[k].saturating_sub(1);
                hi[k] = (hi[k] + 1).min(n - 1);
            }
        }
        if (0..d).all(|k| lo[k] == 0 && hi[k] == n - 1) {
            return Err(Error::WholeDomainPatch { element: center, ell });
        }
        let mut elements = Vec::new();
        if d == 1 {
            elements.extend(lo[0]..=hi[0]);
        } else {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    elements.push(i * n + j);
                }
            }
        }
        Ok(Patch {
            d,
            log_coarse: spec.log(Level::Coarse),
            log_fine: spec.log(Level::Fine),
            center,
            center_idx: c,
            ell,
            lo,
            hi,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn center_index(&self) -> [usize; 2] {
        self.center_idx
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn log_coarse(&self) -> u32 {
        self.log_coarse
    }

    /// Coarse elements of the patch (global linear indices, lexicographic).
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Number `N` of coarse elements in the patch.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Inclusive coarse multi-index bounds.
    pub fn bounds(&self) -> ([usize; 2], [usize; 2]) {
        (self.lo, self.hi)
    }

    /// Coarse elements per axis in the patch.
    pub fn extent(&self) -> [usize; 2] {
        let mut e = [1, 1];
        for k in 0..self.d {
            e[k] = self.hi[k] - self.lo[k] + 1;
        }
        e
    }

    /// Position of the center element within [`Patch::elements`].
    pub fn center_local(&self) -> usize {
        self.elements
            .iter()
            .position(|&e| e == self.center)
            .expect("center lies in its patch")
    }

    /// Multi-index of a local element relative to the patch origin.
    pub fn local_index(&self, local: usize) -> [usize; 2] {
        let e = self.extent();
        if self.d == 1 {
            [local, 0]
        } else {
            [local / e[1], local % e[1]]
        }
    }

    pub fn shape_key(&self) -> ShapeKey {
        let n = 1usize << self.log_coarse;
        let mut key = ShapeKey {
            below: [0; 2],
            above: [0; 2],
            touch_below: [false; 2],
            touch_above: [false; 2],
        };
        for k in 0..self.d {
            key.below[k] = self.center_idx[k] - self.lo[k];
            key.above[k] = self.hi[k] - self.center_idx[k];
            key.touch_below[k] = self.lo[k] == 0;
            key.touch_above[k] = self.hi[k] == n - 1;
        }
        key
    }

    /// Fine mesh region `D_T`.
    pub fn region(&self) -> MeshRegion {
        let r = 1usize << (self.log_fine - self.log_coarse);
        let mut lo = [0, 0];
        let mut hi = [0, 0];
        for k in 0..self.d {
            lo[k] = self.lo[k] * r;
            hi[k] = (self.hi[k] + 1) * r;
        }
        MeshRegion::new(self.d, self.log_fine, lo, hi)
    }
}

/// Classification of a fine node of a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Interior node of the region; carries an unknown.
    Free,
    /// On the region boundary but not on `∂D`; carries Dirichlet data.
    Trace,
    /// On `∂D` (the segment `Γ`); always zero.
    Gamma,
}

/// Axis-aligned box of fine cells `[lo, hi)` (in fine cell units).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeshRegion {
    d: usize,
    log_fine: u32,
    lo: [usize; 2],
    hi: [usize; 2],
}

impl MeshRegion {
    pub fn new(d: usize, log_fine: u32, lo: [usize; 2], hi: [usize; 2]) -> Self {
        let mut lo = lo;
        let mut hi = hi;
        if d == 1 {
            lo[1] = 0;
            hi[1] = 0;
        }
        MeshRegion { d, log_fine, lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn log_fine(&self) -> u32 {
        self.log_fine
    }

    pub fn h(&self) -> f64 {
        (-(self.log_fine as f64)).exp2()
    }

    pub fn cell_lo(&self) -> [usize; 2] {
        self.lo
    }

    pub fn cells_per_axis(&self) -> [usize; 2] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]]
    }

    pub fn nodes_per_axis(&self) -> [usize; 2] {
        let c = self.cells_per_axis();
        if self.d == 1 {
            [c[0] + 1, 1]
        } else {
            [c[0] + 1, c[1] + 1]
        }
    }

    pub fn num_cells(&self) -> usize {
        let c = self.cells_per_axis();
        if self.d == 1 {
            c[0]
        } else {
            c[0] * c[1]
        }
    }

    pub fn num_nodes(&self) -> usize {
        let n = self.nodes_per_axis();
        n[0] * n[1]
    }

    pub fn node_index(&self, local: [usize; 2]) -> usize {
        local[0] * self.nodes_per_axis()[1] + local[1]
    }

    pub fn node_local(&self, node: usize) -> [usize; 2] {
        let n1 = self.nodes_per_axis()[1];
        [node / n1, node % n1]
    }

    /// Node coordinates in the unit box.
    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let l = self.node_local(node);
        let h = self.h();
        [(self.lo[0] + l[0]) as f64 * h, (self.lo[1] + l[1]) as f64 * h]
    }

    pub fn cell_local(&self, cell: usize) -> [usize; 2] {
        if self.d == 1 {
            [cell, 0]
        } else {
            let c1 = self.cells_per_axis()[1];
            [cell / c1, cell % c1]
        }
    }

    /// Global fine-cell multi-index of a local cell.
    pub fn cell_global(&self, cell: usize) -> [usize; 2] {
        let l = self.cell_local(cell);
        [self.lo[0] + l[0], self.lo[1] + l[1]]
    }

    pub fn cell_midpoint(&self, cell: usize) -> [f64; 2] {
        let g = self.cell_global(cell);
        let h = self.h();
        [(g[0] as f64 + 0.5) * h, (g[1] as f64 + 0.5) * h]
    }

    /// Corner nodes of a cell. In 2D the order is counterclockwise:
    /// `(0,0), (1,0), (1,1), (0,1)` in (axis 0, axis 1) offsets.
    pub fn cell_nodes(&self, cell: usize) -> ([usize; 4], usize) {
        let l = self.cell_local(cell);
        if self.d == 1 {
            ([l[0], l[0] + 1, 0, 0], 2)
        } else {
            let n1 = self.nodes_per_axis()[1];
            let base = l[0] * n1 + l[1];
            ([base, base + n1, base + n1 + 1, base + 1], 4)
        }
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        let l = self.node_local(node);
        let c = self.cells_per_axis();
        let n_global = 1usize << self.log_fine;
        let mut on_region_boundary = false;
        let mut on_domain_boundary = false;
        for k in 0..self.d {
            if l[k] == 0 || l[k] == c[k] {
                on_region_boundary = true;
                let g = self.lo[k] + l[k];
                if g == 0 || g == n_global {
                    on_domain_boundary = true;
                }
            }
        }
        match (on_region_boundary, on_domain_boundary) {
            (false, _) => NodeKind::Free,
            (true, true) => NodeKind::Gamma,
            (true, false) => NodeKind::Trace,
        }
    }

    pub fn node_kinds(&self) -> Vec<NodeKind> {
        (0..self.num_nodes()).map(|n| self.node_kind(n)).collect()
    }

    /// Cells of the region grouped by the level-`log` element containing them.
    /// Fails unless the region is a union of such elements.
    pub fn elements_per_axis(&self, log: u32) -> Result<[usize; 2]> {
        if log > self.log_fine {
            return Err(Error::Config(format!(
                "target level 2^-{log} is finer than the data level 2^-{}",
                self.log_fine
            )));
        }
        let r = 1usize << (self.log_fine - log);
        let c = self.cells_per_axis();
        let mut e = [1, 1];
        for k in 0..self.d {
            if self.lo[k] % r != 0 || c[k] % r != 0 {
                return Err(Error::Config(format!(
                    "region is not aligned with level 2^-{log}"
                )));
            }
            e[k] = c[k] / r;
        }
        Ok(e)
    }

    /// Local element (lexicographic in the region) of level `log` containing
    /// a local cell, for `r = 2^(log_fine - log)` cells per element side.
    pub fn element_of_cell(&self, cell: usize, r: usize, elems: [usize; 2]) -> usize {
        let l = self.cell_local(cell);
        if self.d == 1 {
            l[0] / r
        } else {
            (l[0] / r) * elems[1] + l[1] / r
        }
    }

    /// Exact element averages at level `log` of the Q1 interpolant of nodal
    /// values on this region. The tensor trapezoid rule on each fine cell is
    /// exact for multilinear functions.
    pub fn element_averages(&self, values: &[f64], log: u32) -> Result<Vec<f64>> {
        assert_eq!(values.len(), self.num_nodes(), "nodal vector length");
        let elems = self.elements_per_axis(log)?;
        let r = 1usize << (self.log_fine - log);
        let mut out = vec![0.0; elems[0] * elems[1]];
        let corner_weight = 1.0 / (1usize << self.d) as f64;
        for cell in 0..self.num_cells() {
            let (nodes, nn) = self.cell_nodes(cell);
            let s: f64 = nodes[..nn].iter().map(|&n| values[n]).sum();
            out[self.element_of_cell(cell, r, elems)] += s * corner_weight;
        }
        let cells_per_elem = r.pow(self.d as u32) as f64;
        for v in &mut out {
            *v /= cells_per_elem;
        }
        Ok(out)
    }
}

/// A piecewise constant function on the uniform mesh with `2^log` elements
/// per axis covering the whole domain.
#[derive(Clone, Debug, PartialEq)]
pub struct P0Function {
    pub d: usize,
    pub log: u32,
    pub values: Vec<f64>,
}

impl P0Function {
    pub fn new(d: usize, log: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1usize << (log as usize * d), "P0 length");
        P0Function { d, log, values }
    }

    pub fn zeros(d: usize, log: u32) -> Self {
        P0Function::new(d, log, vec![0.0; 1usize << (log as usize * d)])
    }

    pub fn element_measure(&self) -> f64 {
        (-((self.log as usize * self.d) as f64)).exp2()
    }

    /// `L^2(D)` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.element_measure()).sqrt()
    }

    /// Projection onto a coarser (or the same) level by averaging children.
    pub fn project(&self, log: u32) -> Result<P0Function> {
        if log > self.log {
            return Err(Error::Config(format!(
                "cannot project level 2^-{} data onto finer level 2^-{log}",
                self.log
            )));
        }
        if log == self.log {
            return Ok(self.clone());
        }
        let r = 1usize << (self.log - log);
        let n_src = 1usize << self.log;
        let n_dst = 1usize << log;
        let mut out = P0Function::zeros(self.d, log);
        let children = r.pow(self.d as u32) as f64;
        if self.d == 1 {
            for (i, v) in self.values.iter().enumerate() {
                out.values[i / r] += v;
            }
        } else {
            for i in 0..n_src {
                for j in 0..n_src {
                    out.values[(i / r) * n_dst + j / r] += self.values[i * n_src + j];
                }
            }
        }
        for v in &mut out.values {
            *v /= children;
        }
        Ok(out)
    }
}

/// `L^2`-orthogonal projection of a nodal Q1 function on the whole domain
/// onto piecewise constants with `2^log` elements per axis.
pub fn project_p0(region: &MeshRegion, nodal: &[f64], log: u32) -> Result<P0Function> {
    let n = 1usize << region.log_fine();
    let whole = region.cell_lo() == [0, 0]
        && region.cells_per_axis()[0] == n
        && (region.dim() == 1 || region.cells_per_axis()[1] == n);
    if !whole {
        return Err(Error::Config(
            "project_p0 expects a function on the whole domain".into(),
        ));
    }
    let values = region.element_averages(nodal, log)?;
    Ok(P0Function::new(region.dim(), log, values))
}

/// Weights `w_T(K) = |H^-1 (m_K - m_T)|_inf^r` for the elements of a patch,
/// in patch order.
pub fn weight_function(patch: &Patch, r: u32) -> Vec<f64> {
    let c = patch.center_index();
    let (lo, _) = patch.bounds();
    (0..patch.len())
        .map(|local| {
            let l = patch.local_index(local);
            let dist = (0..patch.dim())
                .map(|k| (lo[k] + l[k]).abs_diff(c[k]))
                .max()
                .unwrap_or(0);
            (dist as f64).powi(r as i32)
        })
        .collect()
}
