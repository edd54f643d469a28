//! Random coefficient fields, piecewise constant on the `eps`-mesh.
//!
//! Every draw comes from a ChaCha8 stream whose 256-bit key is the tuple
//! `(global seed, purpose, stream id, sample index)`. Streams are therefore
//! independent of execution order and can be generated concurrently.

mod rd;

pub use rd::{generalized_golden_ratio, RdSequence};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Level, MeshRegion, Patch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sampler {
    PseudoRandom,
    /// `R_d` sequence, one dimension per `eps`-cell; whole-domain draws in 1D only.
    LowDiscrepancy,
}

/// I.i.d. uniform element values on `[alpha, beta]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldLaw {
    pub alpha: f64,
    pub beta: f64,
    pub sampler: Sampler,
}

impl Default for FieldLaw {
    fn default() -> Self {
        FieldLaw {
            alpha: 0.1,
            beta: 1.0,
            sampler: Sampler::PseudoRandom,
        }
    }
}

impl FieldLaw {
    pub fn uniform(alpha: f64, beta: f64) -> Result<Self> {
        let law = FieldLaw {
            alpha,
            beta,
            sampler: Sampler::PseudoRandom,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= self.beta && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "field law needs 0 < alpha <= beta, got [{}, {}]",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// A point mass: every sample is the constant field `alpha`.
    pub fn is_degenerate(&self) -> bool {
        self.alpha == self.beta
    }

    fn map_unit(&self, u: f64) -> f64 {
        self.alpha + (self.beta - self.alpha) * u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    BasisSampling = 1,
    BoundaryData = 2,
    Reference = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    Global,
    /// Keyed by the coarse element at the patch center.
    Patch(usize),
    /// Keyed by a patch shape; translates of a patch share the stream.
    ShapeClass(u64),
}

impl StreamId {
    fn code(self) -> u64 {
        match self {
            StreamId::Global => 0,
            StreamId::Patch(t) => (1u64 << 62) | t as u64,
            StreamId::ShapeClass(c) => (2u64 << 62) | c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedScheme {
    pub global_seed: u64,
    pub purpose: Purpose,
    pub stream: StreamId,
}

impl SeedScheme {
    pub fn new(global_seed: u64, purpose: Purpose) -> Self {
        SeedScheme {
            global_seed,
            purpose,
            stream: StreamId::Global,
        }
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        SeedScheme { purpose, ..self }
    }

    pub fn with_stream(self, stream: StreamId) -> Self {
        SeedScheme { stream, ..self }
    }

    /// The random stream of one sample.
    pub fn rng(&self, sample_index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.global_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(self.purpose as u64).to_le_bytes());
        key[16..24].copy_from_slice(&self.stream.code().to_le_bytes());
        key[24..32].copy_from_slice(&sample_index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Seeded(SeedScheme),
    LowDiscrepancy,
}

/// One realization on a box of `eps`-cells (the whole domain or a patch).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    d: usize,
    log_eps: u32,
    lo: [usize; 2],
    extent: [usize; 2],
    values: Vec<f64>,
    pub sample_index: u64,
    pub provenance: Provenance,
}

impl FieldSample {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_eps(&self) -> u32 {
        self.log_eps
    }

    /// Lower corner and extent of the covered box, in `eps`-cells.
    pub fn bounds(&self) -> ([usize; 2], [usize; 2]) {
        (self.lo, self.extent)
    }

    /// Value on the `eps`-cell with global multi-index `g`, if covered.
    pub fn value_at(&self, g: [usize; 2]) -> Option<f64> {
        let mut local = [0, 0];
        for k in 0..self.d {
            if g[k] < self.lo[k] || g[k] >= self.lo[k] + self.extent[k] {
                return None;
            }
            local[k] = g[k] - self.lo[k];
        }
        Some(self.values[local[0] * self.extent[1] + local[1]])
    }

    /// Writes `element,value` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "element,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v:.16e}")?;
        }
        Ok(())
    }
}

fn eps_box(spec: &GridSpec) -> ([usize; 2], [usize; 2]) {
    let n = spec.per_axis(Level::Eps);
    ([0, 0], [n, if spec.dim() == 2 { n } else { 1 }])
}

fn draw_box(
    spec: &GridSpec,
    law: &FieldLaw,
    seeds: &SeedScheme,
    sample_index: u64,
    lo: [usize; 2],
    extent: [usize; 2],
) -> FieldSample {
    let mut rng = seeds.rng(sample_index);
    let count = extent[0] * extent[1];
    let values = (0..count).map(|_| law.map_unit(rng.random::<f64>())).collect();
    FieldSample {
        d: spec.dim(),
        log_eps: spec.log(Level::Eps),
        lo,
        extent,
        values,
        sample_index,
        provenance: Provenance::Seeded(*seeds),
    }
}

/// A whole-domain realization. Honors the law's sampler kind.
pub fn sample_field(
    spec: &GridSpec,
    law: &FieldLaw,
    seeds: &SeedScheme,
    sample_index: u64,
) -> Result<FieldSample> {
    match law.sampler {
        Sampler::PseudoRandom => {
            let (lo, extent) = eps_box(spec);
            Ok(draw_box(spec, law, seeds, sample_index, lo, extent))
        }
        Sampler::LowDiscrepancy => sample_field_lowdiscrepancy(spec, law, sample_index),
    }
}

/// A realization covering only the `eps`-cells of a patch, with values drawn
/// in patch-local order. Two translated patches with the same stream see
/// identical local values.
pub fn sample_patch_field(
    spec: &GridSpec,
    patch: &Patch,
    law: &FieldLaw,
    seeds: &SeedScheme,
    sample_index: u64,
) -> FieldSample {
    let r = spec.ratio(Level::Coarse, Level::Eps);
    let (plo, _) = patch.bounds();
    let pe = patch.extent();
    let mut lo = [0, 0];
    let mut extent = [1, 1];
    for k in 0..spec.dim() {
        lo[k] = plo[k] * r;
        extent[k] = pe[k] * r;
    }
    draw_box(spec, law, seeds, sample_index, lo, extent)
}

/// Point `sample_index + 1` of the `R_d` sequence with one coordinate per
/// `eps`-cell, mapped to `[alpha, beta]`.
pub fn sample_field_lowdiscrepancy(
    spec: &GridSpec,
    law: &FieldLaw,
    sample_index: u64,
) -> Result<FieldSample> {
    if spec.dim() != 1 {
        return Err(Error::Unsupported(
            "low-discrepancy coefficient sampling is only available in 1D".into(),
        ));
    }
    let (lo, extent) = eps_box(spec);
    let seq = RdSequence::new(extent[0]);
    let values = seq
        .point(sample_index + 1)
        .into_iter()
        .map(|u| law.map_unit(u))
        .collect();
    Ok(FieldSample {
        d: 1,
        log_eps: spec.log(Level::Eps),
        lo,
        extent,
        values,
        sample_index,
        provenance: Provenance::LowDiscrepancy,
    })
}

/// Coefficient value on every fine cell of `region`.
pub fn restrict_field(field: &FieldSample, region: &MeshRegion) -> Result<Vec<f64>> {
    let shift = region.log_fine() - field.log_eps;
    (0..region.num_cells())
        .map(|c| {
            let g = region.cell_global(c);
            field
                .value_at([g[0] >> shift, g[1] >> shift])
                .ok_or_else(|| Error::Config("region extends beyond the field sample".into()))
        })
        .collect()
}
