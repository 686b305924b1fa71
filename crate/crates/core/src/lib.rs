//! Buckling eigenvalues of clamped plates (`Δ²u = −ΛΔu`, `u = ∂u/∂ν = 0` on
//! the boundary) on planar domains and spherical caps, audited against
//! universal eigenvalue inequalities.
//!
//! * [`spectrum`]: validated spectra and their JSON/CSV files.
//! * [`bounds`]: the inequality family, bound extraction, δ optimisation.
//! * [`discretize`]: finite-difference operator pairs `(A, B)`.
//! * [`eigensolve`]: lowest generalized eigenpairs, plus a dense oracle.
//! * [`oracle`]: Bessel zeros and analytic reference spectra.
//! * [`solve`]: the spectrum of a domain, merging azimuthal modes.
//! * [`probe`]: discrete versions of the identities behind the Euclidean
//!   inequality, evaluated on computed eigenfunctions.
//!
//! The guide in `book/` walks through each of these with runnable snippets.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod discretize;
pub mod eigensolve;
pub mod linalg;
pub mod oracle;
pub mod probe;
pub mod solve;
pub mod spectrum;
pub mod sum;

pub use bounds::{BoundError, BoundForm, DeltaSequence};
pub use spectrum::{FileFormat, Geometry, ProblemKind, Spectrum, SpectrumError, SpectrumTags};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/spectra.md")]
    pub struct Spectra;
    #[doc = include_str!("../../../book/src/inequalities.md")]
    pub struct Inequalities;
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub struct Bounds;
    #[doc = include_str!("../../../book/src/discretization.md")]
    pub struct Discretization;
    #[doc = include_str!("../../../book/src/eigensolver.md")]
    pub struct Eigensolver;
    #[doc = include_str!("../../../book/src/probe.md")]
    pub struct ProbeChapter;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
