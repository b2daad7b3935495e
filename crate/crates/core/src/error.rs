use alloc::boxed::Box;
use alloc::string::String;

use crate::diagnostics::DiagnosticsRecord;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the closed unit disk")]
    Domain(f64, f64),
    #[error("quadrature weight exponent {alpha} must exceed -1")]
    InvalidWeight { alpha: f64 },
    #[error("k = {k} must exceed 1: the drag-closure integrands behave like (1-|R|^2)^(k-2)")]
    Integrability { k: f64 },
    #[error("quadrature ({n_r} radial x {n_theta} angular nodes) cannot integrate basis products of degree {degree} exactly")]
    Resolution {
        n_r: usize,
        n_theta: usize,
        degree: usize,
    },
    #[error("operator assembly failed: {0}")]
    Assembly(String),
    #[error("zero weighted H1 seminorm for a nonzero zero-mass input")]
    DegenerateInput,
    #[error("CFL violated: dt = {dt:e} exceeds the admissible {suggested:e}")]
    StepRejected { dt: f64, suggested: f64 },
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("non-finite norm at t = {t}")]
    BlowUp {
        t: f64,
        last_valid: Option<Box<DiagnosticsRecord>>,
    },
    #[error("records are not uniformly spaced in time (spacing {first} vs {found}); resample first")]
    NonuniformSpacing { first: f64, found: f64 },
    #[error("fit window [{t0}, {t1}] spans less than one decade in 1+t")]
    InsufficientRange { t0: f64, t1: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
