//! Source-term identification and the collocation-type coarse model.
//!
//! For each coarse element `T` the pipeline on the patch `D_T` is: sample
//! projected harmonic extensions for `M` coefficient draws, accumulate their
//! Gram matrix, select `g_T` from its lower spectrum, then average the
//! projected patch responses to `g_T` over the same draws. The coarse
//! solution combines these mean responses with the coefficients of `Π_H f`
//! in the basis `{g_T}`.

pub mod cache;
mod sampling;
mod select;

pub use sampling::{accumulate_gram, sample_projected_harmonics, GramAccumulator, ProjectedBlock};
pub use select::{candidate_set, select_source_term, GramEigen, Objective, Selection, SelectionRule};

use crate::error::{Error, Result};
use crate::fem::{assemble_load_p0, LocalProblem};
use crate::field::{restrict_field, sample_field, sample_patch_field, FieldLaw, Purpose, SeedScheme, StreamId};
use crate::grid::{weight_function, GridSpec, Level, MeshRegion, P0Function, Patch, ShapeKey};
use crate::lod::{lod_source_sample, LodMean};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Sampling and selection parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    /// Coefficient samples `M`.
    pub samples: usize,
    /// Boundary samples per patch element, `m = m_factor * N`.
    pub m_factor: usize,
    pub p: f64,
    pub r: u32,
    pub threshold_floor: f64,
    pub objective: Objective,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples: 5000,
            m_factor: 3,
            p: 1.5,
            r: 6,
            threshold_floor: 1e-10,
            objective: Objective::Minimize,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 || self.m_factor < 1 || !(self.p > 1.0) || self.r < 1 {
            return Err(Error::Config(format!(
                "sampling config needs M >= 1, mFactor >= 1, p > 1, r >= 1 (got M={}, mFactor={}, p={}, r={})",
                self.samples, self.m_factor, self.p, self.r
            )));
        }
        if !(self.threshold_floor >= 0.0) {
            return Err(Error::Config("threshold floor must be nonnegative".into()));
        }
        Ok(())
    }

    fn rule(&self) -> SelectionRule {
        SelectionRule {
            p: self.p,
            floor: self.threshold_floor,
            objective: self.objective,
        }
    }
}

/// Generator of the local source terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SourceKind {
    #[default]
    Slod,
    Lod,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Slod => "slod",
            SourceKind::Lod => "lod",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slod" => Ok(SourceKind::Slod),
            "lod" => Ok(SourceKind::Lod),
            _ => Err(Error::Config(format!("unknown source kind '{s}'"))),
        }
    }
}

/// How patch random streams are keyed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SeedScope {
    /// One stream per patch center.
    #[default]
    PerPatch,
    /// Translated patches (equal [`ShapeKey`]) share a stream.
    PerShapeClass,
}

impl SeedScope {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedScope::PerPatch => "patch",
            SeedScope::PerShapeClass => "shape",
        }
    }
}

impl std::str::FromStr for SeedScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patch" => Ok(SeedScope::PerPatch),
            "shape" => Ok(SeedScope::PerShapeClass),
            _ => Err(Error::Config(format!("unknown seed scope '{s}'"))),
        }
    }
}

/// Execution options of [`build_model`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelOptions {
    pub source: SourceKind,
    pub scope: SeedScope,
    /// Compute one patch per shape class and translate. Requires
    /// [`SeedScope::PerShapeClass`].
    pub reuse_translations: bool,
    /// Use restrictions of the reference-stream fields instead of patch
    /// streams.
    pub common_random_numbers: bool,
    /// Worker threads over patches; 1 runs serially, 0 uses all cores.
    pub threads: usize,
    /// Skip the mean-response pass (source terms and indicators only).
    pub skip_responses: bool,
    pub cache_dir: Option<PathBuf>,
}

impl ModelOptions {
    pub fn validate(&self) -> Result<()> {
        if self.reuse_translations && self.scope != SeedScope::PerShapeClass {
            return Err(Error::Config("translation reuse requires per-shape seed scope".into()));
        }
        if self.reuse_translations && self.common_random_numbers {
            return Err(Error::Config(
                "translation reuse is incompatible with common random numbers".into(),
            ));
        }
        Ok(())
    }
}

/// Coefficient and boundary-data draws of one patch.
#[derive(Clone, Debug)]
pub struct PatchSampler<'a> {
    spec: &'a GridSpec,
    patch: &'a Patch,
    law: &'a FieldLaw,
    coefficient_seeds: SeedScheme,
    boundary_seeds: SeedScheme,
    common: Option<SeedScheme>,
    region: MeshRegion,
}

impl<'a> PatchSampler<'a> {
    pub fn new(spec: &'a GridSpec, patch: &'a Patch, law: &'a FieldLaw, seed: u64, stream: StreamId, common_random_numbers: bool) -> Self {
        let base = SeedScheme::new(seed, Purpose::BasisSampling).with_stream(stream);
        PatchSampler {
            spec,
            patch,
            law,
            coefficient_seeds: base,
            boundary_seeds: base.with_purpose(Purpose::BoundaryData),
            common: common_random_numbers.then(|| SeedScheme::new(seed, Purpose::Reference)),
            region: patch.region(),
        }
    }

    /// Stream of a patch under the given scope.
    pub fn stream(patch: &Patch, scope: SeedScope) -> StreamId {
        match scope {
            SeedScope::PerPatch => StreamId::Patch(patch.center()),
            SeedScope::PerShapeClass => StreamId::ShapeClass(patch.shape_key().code()),
        }
    }

    pub fn region(&self) -> &MeshRegion {
        &self.region
    }

    pub fn boundary_seeds(&self) -> &SeedScheme {
        &self.boundary_seeds
    }

    /// Fine-cell coefficient values of sample `i` on the patch.
    pub fn coefficient(&self, i: u64) -> Result<Vec<f64>> {
        let field = match &self.common {
            Some(seeds) => sample_field(self.spec, self.law, seeds, i)?,
            None => sample_patch_field(self.spec, self.patch, self.law, &self.coefficient_seeds, i),
        };
        restrict_field(&field, &self.region)
    }

    pub fn problem(&self, i: u64) -> Result<LocalProblem> {
        LocalProblem::assemble(&self.region, &self.coefficient(i)?)
    }
}

/// Local source term in P0 values over the patch elements (patch order).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSourceTerm {
    pub center: usize,
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl LocalSourceTerm {
    pub fn l2_norm(&self, element_measure: f64) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * element_measure).sqrt()
    }

    /// `sqrt|K|`-scaled coordinates.
    pub fn coords(&self, element_measure: f64) -> Vec<f64> {
        let s = element_measure.sqrt();
        self.values.iter().map(|v| v * s).collect()
    }

    fn from_coords(center: usize, coords: &[f64], element_measure: f64) -> Self {
        let s = element_measure.sqrt();
        LocalSourceTerm {
            center,
            values: coords.iter().map(|c| c / s).collect(),
            normalized: true,
        }
    }
}

/// Streamed mean and second central moment of projected responses.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanResponse {
    pub mean: Vec<f64>,
    /// Sum of squared deviations (Welford), divide by `count - 1` for the
    /// sample variance.
    pub m2: Vec<f64>,
    pub count: usize,
}

/// Everything computed for one coarse element.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    pub center: usize,
    pub kind: SourceKind,
    /// Global coarse elements of the patch, canonical order.
    pub elements: Vec<usize>,
    pub source: LocalSourceTerm,
    /// `sigma_N / sqrt(m M)` for slod; the Gram Rayleigh quotient of `g_T`
    /// scaled the same way for lod.
    pub sigma_t: f64,
    /// `sigma_N` of the sampled matrix, unscaled.
    pub sigma_raw: f64,
    /// `sqrt(g^T X X^T g / (m M))` of the selected source term.
    pub rayleigh: f64,
    pub candidates: usize,
    pub response: MeanResponse,
}

/// Number of coefficient draws actually used. A point-mass law makes every
/// draw identical, so one suffices.
pub fn effective_samples(law: &FieldLaw, cfg: &SamplingConfig) -> usize {
    if law.is_degenerate() {
        1
    } else {
        cfg.samples
    }
}

/// Streams the projected responses to `source` over `samples` draws, in
/// sample order.
pub fn compute_local_basis(
    patch: &Patch,
    source: &LocalSourceTerm,
    sampler: &PatchSampler,
    samples: usize,
) -> Result<MeanResponse> {
    let region = sampler.region();
    let load = assemble_load_p0(region, patch.log_coarse(), &source.values)?;
    let n = patch.len();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for i in 0..samples {
        let run = || -> Result<Vec<f64>> {
            let problem = sampler.problem(i as u64)?;
            let u = problem.solve(&load)?;
            u.element_averages(patch.log_coarse())
        };
        let x = run().map_err(|e| e.at_sample(i))?;
        let k = (i + 1) as f64;
        for ((m, s), v) in mean.iter_mut().zip(m2.iter_mut()).zip(&x) {
            let delta = v - *m;
            *m += delta / k;
            *s += delta * (v - *m);
        }
    }
    Ok(MeanResponse { mean, m2, count: samples })
}

/// Runs the full per-patch pipeline.
pub fn compute_patch(
    spec: &GridSpec,
    patch: &Patch,
    law: &FieldLaw,
    cfg: &SamplingConfig,
    opts: &ModelOptions,
    seed: u64,
) -> Result<LocalBasis> {
    let stream = PatchSampler::stream(patch, opts.scope);
    let sampler = PatchSampler::new(spec, patch, law, seed, stream, opts.common_random_numbers);
    let samples = effective_samples(law, cfg);
    let n = patch.len();
    let m = cfg.m_factor * n;
    let measure = spec.size(Level::Coarse).powi(spec.dim() as i32);
    let mut gram = GramAccumulator::new(n);
    let mut lod = LodMean::new(n);
    for i in 0..samples {
        let mut step = || -> Result<()> {
            let problem = sampler.problem(i as u64)?;
            let block = sample_projected_harmonics(patch, &problem, m, sampler.boundary_seeds(), i as u64)?;
            gram.add(&block);
            if opts.source == SourceKind::Lod {
                lod.add(&lod_source_sample(spec, patch, &problem)?);
            }
            Ok(())
        };
        step().map_err(|e| e.at_sample(i))?;
    }
    let g = gram.finish();
    let eig = GramEigen::new(&g);
    let scale = ((m * samples) as f64).sqrt();
    let sigma_raw = eig.values[n - 1].max(0.0).sqrt();
    let (coords, candidates) = match opts.source {
        SourceKind::Slod => {
            let weights = weight_function(patch, cfg.r);
            let s = select_source_term(&eig, &weights, patch.center_local(), &cfg.rule())?;
            (s.coords, s.candidates.len())
        }
        SourceKind::Lod => {
            let src = lod.finish(patch.center(), measure)?;
            let s = measure.sqrt();
            (src.normalized.iter().map(|v| v * s).collect::<Vec<_>>(), 0)
        }
    };
    let gv = DVector::from_column_slice(&coords);
    let rayleigh = (gv.dot(&(&g * &gv)).max(0.0)).sqrt() / scale;
    let sigma_t = match opts.source {
        SourceKind::Slod => sigma_raw / scale,
        SourceKind::Lod => rayleigh,
    };
    let source = LocalSourceTerm::from_coords(patch.center(), &coords, measure);
    let response = if opts.skip_responses {
        MeanResponse { mean: vec![0.0; n], m2: vec![0.0; n], count: 0 }
    } else {
        compute_local_basis(patch, &source, &sampler, samples)?
    };
    log::debug!(
        "patch {}: N={n} m={m} M={samples} sigma_T={sigma_t:e} candidates={candidates}",
        patch.center()
    );
    Ok(LocalBasis {
        center: patch.center(),
        kind: opts.source,
        elements: patch.elements().to_vec(),
        source,
        sigma_t,
        sigma_raw,
        rayleigh,
        candidates,
        response,
    })
}

/// All local bases with the global expansion and Gram matrices.
#[derive(Clone, Debug)]
pub struct CoarseModel {
    pub spec: GridSpec,
    pub ell: usize,
    pub bases: Vec<LocalBasis>,
    /// Column `T` is `g_T` in `sqrt|K|`-scaled coordinates.
    pub expansion: DMatrix<f64>,
    /// `G = B^T B`, the `L^2` Gram matrix of the source terms.
    pub gram: DMatrix<f64>,
    /// Eigenvalues of `G`, ascending.
    pub gram_eigenvalues: Vec<f64>,
    /// Cache problems encountered while building (recomputed patches).
    pub warnings: Vec<String>,
}

impl CoarseModel {
    /// Assembles the global matrices from one basis per coarse element in
    /// canonical order.
    pub fn from_bases(spec: GridSpec, ell: usize, bases: Vec<LocalBasis>) -> Result<Self> {
        let nt = spec.count(Level::Coarse);
        if bases.len() != nt || bases.iter().enumerate().any(|(t, b)| b.center != t) {
            return Err(Error::Config("model needs one basis per coarse element in order".into()));
        }
        let measure = spec.size(Level::Coarse).powi(spec.dim() as i32);
        let mut b = DMatrix::zeros(nt, nt);
        for (t, basis) in bases.iter().enumerate() {
            for (&k, c) in basis.elements.iter().zip(basis.source.coords(measure)) {
                b[(k, t)] = c;
            }
        }
        let gram = b.transpose() * &b;
        let gram = (&gram + gram.transpose()) * 0.5;
        let mut gram_eigenvalues: Vec<f64> = gram.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        gram_eigenvalues.sort_by(f64::total_cmp);
        Ok(CoarseModel {
            spec,
            ell,
            bases,
            expansion: b,
            gram,
            gram_eigenvalues,
            warnings: Vec::new(),
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.gram_eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.gram_eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Condition number of `B`, `sqrt(lambda_max / lambda_min)` of `G`.
    pub fn condition(&self) -> f64 {
        let lmin = self.lambda_min();
        if lmin > 0.0 {
            (self.lambda_max() / lmin).sqrt()
        } else {
            f64::INFINITY
        }
    }
}

/// `1 / lambda_min` of a source-term Gram matrix.
pub fn crb_from_gram(gram: &DMatrix<f64>) -> Result<f64> {
    let e = gram.clone().symmetric_eigen();
    let lmin = e.eigenvalues.min();
    let lmax = e.eigenvalues.max();
    riesz_check(lmin, lmax, gram.nrows())?;
    Ok(1.0 / lmin)
}

fn riesz_check(lmin: f64, lmax: f64, n: usize) -> Result<()> {
    let condition = if lmin > 0.0 { (lmax / lmin).sqrt() } else { f64::INFINITY };
    if !(lmin > n as f64 * f64::EPSILON * lmax) {
        return Err(Error::RieszFailure { lambda_min: lmin, condition });
    }
    Ok(())
}

/// Riesz constant `C_rb = 1 / lambda_min(G)`.
pub fn compute_crb(model: &CoarseModel) -> Result<f64> {
    riesz_check(model.lambda_min(), model.lambda_max(), model.gram.nrows())?;
    Ok(1.0 / model.lambda_min())
}

/// `sigma = max_T sigma_T`.
pub fn sigma_overall(model: &CoarseModel) -> f64 {
    model.bases.iter().map(|b| b.sigma_t).fold(0.0, f64::max)
}

/// Coarse solution with its expansion coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseSolution {
    pub ubar: P0Function,
    pub coefficients: Vec<f64>,
    /// `|Σ c_T g_T - Π_H f| / |Π_H f|` (zero when `Π_H f = 0`).
    pub expansion_residual: f64,
}

const MAX_CONDITION: f64 = 1e12;
const EXPANSION_TOLERANCE: f64 = 1e-8;

/// Expands `Π_H f` in the source terms and combines the mean responses.
pub fn assemble_coarse_solution(model: &CoarseModel, f: &P0Function) -> Result<CoarseSolution> {
    let spec = &model.spec;
    let nt = spec.count(Level::Coarse);
    if f.log != spec.log(Level::Coarse) || f.values.len() != nt {
        return Err(Error::Config("right-hand side must be given on the coarse mesh".into()));
    }
    let s = f.element_measure().sqrt();
    let rhs = DVector::from_iterator(nt, f.values.iter().map(|v| v * s));
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(CoarseSolution {
            ubar: P0Function::zeros(spec.dim(), spec.log(Level::Coarse)),
            coefficients: vec![0.0; nt],
            expansion_residual: 0.0,
        });
    }
    let condition = model.condition();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RieszFailure { lambda_min: model.lambda_min(), condition });
    }
    let c = model
        .expansion
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::RieszFailure { lambda_min: model.lambda_min(), condition })?;
    let residual = (&model.expansion * &c - &rhs).norm() / rhs_norm;
    if !(residual <= EXPANSION_TOLERANCE) {
        return Err(Error::Expansion { residual, tolerance: EXPANSION_TOLERANCE });
    }
    let mut ubar = P0Function::zeros(spec.dim(), spec.log(Level::Coarse));
    for (basis, &ct) in model.bases.iter().zip(c.iter()) {
        for (&k, v) in basis.elements.iter().zip(&basis.response.mean) {
            ubar.values[k] += ct * v;
        }
    }
    Ok(CoarseSolution {
        ubar,
        coefficients: c.iter().copied().collect(),
        expansion_residual: residual,
    })
}

pub(crate) fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn translate(basis: &LocalBasis, patch: &Patch) -> LocalBasis {
    LocalBasis {
        center: patch.center(),
        elements: patch.elements().to_vec(),
        source: LocalSourceTerm {
            center: patch.center(),
            ..basis.source.clone()
        },
        ..basis.clone()
    }
}

/// Builds the coarse model for all coarse elements at oversampling `ell`.
pub fn build_model(
    spec: &GridSpec,
    ell: usize,
    law: &FieldLaw,
    cfg: &SamplingConfig,
    opts: &ModelOptions,
    seed: u64,
) -> Result<CoarseModel> {
    use rayon::prelude::*;
    cfg.validate()?;
    law.validate()?;
    opts.validate()?;
    let nt = spec.count(Level::Coarse);
    let patches: Vec<Patch> = (0..nt).map(|t| spec.patch(t, ell)).collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let mut slots: Vec<Option<LocalBasis>> = vec![None; nt];
    if let Some(dir) = &opts.cache_dir {
        for p in &patches {
            let key = cache::patch_hash(spec, ell, law, cfg, opts, seed, p);
            match cache::load(dir, p.center(), &key) {
                Ok(Some(b)) => slots[p.center()] = Some(b),
                Ok(None) => {}
                Err(e) => {
                    log::warn!("recomputing patch {}: {e}", p.center());
                    warnings.push(format!("patch {}: {e}", p.center()));
                }
            }
        }
    }

    // Representatives to compute: every missing patch, or one per shape
    // class when translating.
    let mut todo: Vec<usize> = Vec::new();
    let mut class_of: BTreeMap<ShapeKey, usize> = BTreeMap::new();
    for p in &patches {
        if slots[p.center()].is_some() {
            continue;
        }
        if opts.reuse_translations {
            let rep = *class_of.entry(p.shape_key()).or_insert(p.center());
            if rep == p.center() {
                todo.push(p.center());
            }
        } else {
            todo.push(p.center());
        }
    }
    let computed: Vec<Result<LocalBasis>> = with_pool(opts.threads, || {
        todo.par_iter()
            .map(|&t| compute_patch(spec, &patches[t], law, cfg, opts, seed))
            .collect()
    })?;
    let mut fresh: BTreeMap<usize, LocalBasis> = BTreeMap::new();
    for (t, r) in todo.iter().zip(computed) {
        fresh.insert(*t, r?);
    }
    for p in &patches {
        let t = p.center();
        if slots[t].is_some() {
            continue;
        }
        let b = if opts.reuse_translations {
            translate(&fresh[&class_of[&p.shape_key()]], p)
        } else {
            fresh.remove(&t).expect("computed patch")
        };
        if let Some(dir) = &opts.cache_dir {
            let key = cache::patch_hash(spec, ell, law, cfg, opts, seed, p);
            cache::store(dir, &b, &key)?;
        }
        slots[t] = Some(b);
    }
    let bases = slots.into_iter().map(|b| b.expect("every patch filled")).collect();
    let mut model = CoarseModel::from_bases(*spec, ell, bases)?;
    model.warnings = warnings;
    Ok(model)
}

/// Projected responses of one deterministic coefficient to the given local
/// source term, without sampling. Used to compare against oracles.
pub fn deterministic_response(patch: &Patch, coeff: &[f64], source: &LocalSourceTerm) -> Result<Vec<f64>> {
    let region = patch.region();
    let problem = LocalProblem::assemble(&region, coeff)?;
    let load = assemble_load_p0(&region, patch.log_coarse(), &source.values)?;
    problem.solve(&load)?.element_averages(patch.log_coarse())
}
