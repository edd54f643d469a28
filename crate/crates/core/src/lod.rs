//! Bubble functions, constrained fine-scale corrections, and source terms
//! averaged from the resulting multipliers.
//!
//! The constraint rows are element averages `(1/|K|) ∫_K v`, so the saddle
//! point `[A B^T; B 0][x; p] = [A b_T; 0]` gives `a(b_T - x, v) = (g, v)` for
//! every free `v`, with `g = Σ_K (p_K / |K|) 1_K`. In particular
//! `(g, 1_K) = p_K = a(b_T - x, b_K)`.

use crate::error::{Error, Result};
use crate::fem::{solve_saddle_point, ConstraintMatrix, FineFunction, LocalProblem};
use crate::grid::{GridSpec, Level, MeshRegion, Patch};
use crate::slod::PatchSampler;

/// Scaled tensor-product hat on one coarse element, as nodal values on the
/// fine region of that element.
#[derive(Clone, Debug, PartialEq)]
pub struct Bubble {
    pub center: usize,
    pub region: MeshRegion,
    pub values: Vec<f64>,
}

/// The bubble of coarse element `t`, normalized to element average 1.
pub fn bubble(spec: &GridSpec, t: usize) -> Result<Bubble> {
    if spec.log(Level::Fine) <= spec.log(Level::Coarse) {
        return Err(Error::Config(
            "bubbles need a fine mesh strictly finer than the coarse mesh".into(),
        ));
    }
    let e = spec.element(Level::Coarse, t);
    let r = spec.ratio(Level::Coarse, Level::Fine);
    let d = spec.dim();
    let mut lo = [0, 0];
    let mut hi = [0, 0];
    for k in 0..d {
        lo[k] = e.idx[k] * r;
        hi[k] = lo[k] + r;
    }
    let region = MeshRegion::new(d, spec.log(Level::Fine), lo, hi);
    let hat = |s: usize| 1.0 - ((2 * s) as f64 / r as f64 - 1.0).abs();
    let mut values: Vec<f64> = (0..region.num_nodes())
        .map(|n| {
            let l = region.node_local(n);
            (0..d).map(|k| hat(l[k])).product()
        })
        .collect();
    let avg = region.element_averages(&values, spec.log(Level::Coarse))?[0];
    for v in &mut values {
        *v /= avg;
    }
    Ok(Bubble { center: t, region, values })
}

impl Bubble {
    /// Nodal values on a larger region containing the element.
    pub fn embed(&self, region: &MeshRegion) -> Vec<f64> {
        let mut out = vec![0.0; region.num_nodes()];
        let off = [
            self.region.cell_lo()[0] - region.cell_lo()[0],
            self.region.cell_lo()[1] - region.cell_lo()[1],
        ];
        for (n, &v) in self.values.iter().enumerate() {
            let l = self.region.node_local(n);
            out[region.node_index([l[0] + off[0], l[1] + off[1]])] = v;
        }
        out
    }
}

/// Corrected bubble `b_T - x` with the multipliers of the saddle point.
#[derive(Clone, Debug)]
pub struct LodCorrection {
    pub phi: FineFunction,
    /// The correction `x` as nodal values.
    pub correction: Vec<f64>,
    /// One multiplier per patch element, `p_K = (g, 1_K)`.
    pub multipliers: Vec<f64>,
}

impl LodCorrection {
    /// Source term values `p_K / |K|`.
    pub fn source(&self, element_measure: f64) -> Vec<f64> {
        self.multipliers.iter().map(|p| p / element_measure).collect()
    }
}

/// Solves the constrained correction problem for nodal data `b` on the
/// problem's region.
pub fn lod_correction(problem: &LocalProblem, constraints: &ConstraintMatrix, b: &[f64]) -> Result<LodCorrection> {
    let op = problem.operator();
    let bf = op.gather(b);
    let rhs = op.apply_free(&bf);
    let (x, p) = solve_saddle_point(problem, constraints, &rhs)?;
    let correction = op.scatter(&x);
    let phi: Vec<f64> = b.iter().zip(&correction).map(|(a, c)| a - c).collect();
    Ok(LodCorrection {
        phi: FineFunction::new(op.region().clone(), phi),
        correction,
        multipliers: p,
    })
}

/// Sample mean of the LOD source terms of a patch and its unit `L^2` copy.
#[derive(Clone, Debug, PartialEq)]
pub struct LodSourceTerm {
    pub center: usize,
    pub mean: Vec<f64>,
    pub normalized: Vec<f64>,
}

/// Streams per-sample source values `p_K / |K|` into their mean.
#[derive(Clone, Debug)]
pub struct LodMean {
    mean: Vec<f64>,
    count: usize,
}

impl LodMean {
    pub fn new(n: usize) -> Self {
        LodMean { mean: vec![0.0; n], count: 0 }
    }

    pub fn add(&mut self, g: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        for (m, v) in self.mean.iter_mut().zip(g) {
            *m += (v - *m) / k;
        }
    }

    pub fn finish(self, center: usize, element_measure: f64) -> Result<LodSourceTerm> {
        let norm = (self.mean.iter().map(|v| v * v).sum::<f64>() * element_measure).sqrt();
        if !(norm > 0.0) {
            return Err(Error::Degenerate("mean LOD source term vanishes".into()));
        }
        let normalized = self.mean.iter().map(|v| v / norm).collect();
        Ok(LodSourceTerm { center, mean: self.mean, normalized })
    }
}

/// One sample's LOD source term on a patch.
pub fn lod_source_sample(spec: &GridSpec, patch: &Patch, problem: &LocalProblem) -> Result<Vec<f64>> {
    let b = bubble(spec, patch.center())?.embed(problem.region());
    let constraints = ConstraintMatrix::new(problem.operator(), patch.log_coarse())?;
    let c = lod_correction(problem, &constraints, &b)?;
    Ok(c.source(spec.size(Level::Coarse).powi(spec.dim() as i32)))
}

/// Mean over `samples` coefficient draws of the LOD source terms.
pub fn mean_lod_source(spec: &GridSpec, patch: &Patch, sampler: &PatchSampler, samples: usize) -> Result<LodSourceTerm> {
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let mut acc = LodMean::new(patch.len());
    for i in 0..samples {
        let problem = sampler.problem(i as u64).map_err(|e| e.at_sample(i))?;
        acc.add(&lod_source_sample(spec, patch, &problem).map_err(|e| e.at_sample(i))?);
    }
    acc.finish(patch.center(), spec.size(Level::Coarse).powi(spec.dim() as i32))
}
