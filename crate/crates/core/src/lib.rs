//! Stochastic super-localized numerical homogenization for
//! `-div(A grad u) = f` on the unit box with random cellwise constant
//! coefficients.
//!
//! Module overview:
//! - [`grid`]: dyadic mesh hierarchy, patches, piecewise constant projection.
//! - [`field`]: coefficient sampling with counter-keyed random streams.
//! - [`fem`]: Q1 assembly, banded Cholesky solves, harmonic extension,
//!   constrained saddle-point solves.
//! - [`slod`]: source-term selection, mean local responses, coarse model.
//! - [`lod`]: bubble corrections and averaged LOD source terms.
//! - [`harness`]: reference Monte-Carlo solver, error metrics, experiments.

pub mod error;
pub mod fem;
pub mod field;
pub mod grid;
pub mod harness;
pub mod lod;
pub mod slod;

pub use error::{Error, Result};
