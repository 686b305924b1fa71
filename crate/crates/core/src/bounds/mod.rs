//! Universal eigenvalue inequalities: signed residuals, upper bounds for
//! `Λ_{k+1}` and optimisation of the δ parameters.
//!
//! Each inequality is a [`BoundForm`]. [`residual`] evaluates one at a
//! candidate `Λ`; [`next_upper_bound`] turns a spectrum prefix into the
//! largest `Λ` the inequality still admits, either as the larger root of a
//! quadratic or by bisection on `inf_δ rhs(Λ, δ) − lhs(Λ)`.

mod delta;
mod engine;
mod form;

pub use delta::{monotone_objective, optimize_delta_monotone, DeltaSequence};
pub use engine::{
    audit_all, envelope, low_order_bounds, next_upper_bound, next_upper_bound_euclid, next_upper_bound_mono,
    optimize_delta_fixed, residual, residual_with, write_audit_csv, AuditEntry, AuditOptions, BoundMethod, BoundResult,
    Certificate, LowOrderBounds,
};
pub use form::BoundForm;

use crate::spectrum::SpectrumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("{form} does not apply to a {reason}")]
    FormMismatch { form: BoundForm, reason: String },
    #[error("unknown bound form `{0}`")]
    UnknownForm(String),
    #[error("{0} needs a δ sequence")]
    MissingDelta(BoundForm),
    #[error("{0} takes no δ sequence")]
    UnexpectedDelta(BoundForm),
    #[error("δ sequence has length {got}, expected {expected}")]
    DeltaLength { got: usize, expected: usize },
    #[error("δ sequence must be non-increasing")]
    NonMonotoneDelta,
    #[error("SPHERE_WX takes a constant δ")]
    NonConstantDelta,
    #[error("δ_{} is not a positive finite number", index + 1)]
    NonPositiveDelta { index: usize },
    #[error("coefficient a_{} is not positive", index + 1)]
    NonPositiveCoefficient { index: usize },
    #[error("some Λ_i ≤ n − 2: the δ_i sphere inequality is undefined there")]
    SphereBelowThreshold,
    #[error("candidate {candidate} is below Λ_k = {last}")]
    CandidateBelowPrefix { candidate: f64, last: f64 },
    #[error("{form} applies only at k = {expected}, got k = {k}")]
    IndexNotApplicable { form: BoundForm, k: usize, expected: usize },
    #[error("negative discriminant ({relative:e} relative): prefix violates the inequality")]
    NegativeDiscriminant { relative: f64 },
    #[error("effective coefficient a_{} ≤ 0: objective unbounded below in δ", index + 1)]
    UnboundedObjective { index: usize },
    #[error("prefix already violates the inequality at Λ = Λ_k")]
    InfeasiblePrefix,
    #[error("bracketing failed: {0}")]
    BracketingFailure(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}
