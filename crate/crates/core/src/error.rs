use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("patch of element {element} with ell={ell} covers the whole domain")]
    WholeDomainPatch { element: usize, ell: usize },

    #[error("coefficient must be positive, found {value} on fine cell {cell}")]
    NonPositiveCoefficient { cell: usize, value: f64 },

    #[error("factorization failed at pivot {pivot} (value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("linear solve did not meet tolerance: residual {residual:e} > {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("constraint matrix is rank deficient (smallest Schur pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("sample {sample} failed: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "local source terms are not a Riesz basis (smallest Gram eigenvalue {lambda_min:e}, \
         condition {condition:e}); increase the threshold exponent p or the weight exponent r"
    )]
    RieszFailure { lambda_min: f64, condition: f64 },

    #[error("expansion residual {residual:e} exceeds {tolerance:e} relative to |Pi_H f|")]
    Expansion { residual: f64, tolerance: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_sample(self, sample: usize) -> Self {
        Error::Sample {
            sample,
            source: Box::new(self),
        }
    }
}
