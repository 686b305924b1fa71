//! From a [`DomainSpec`] to a tagged [`Spectrum`].
//!
//! Planar domains are solved in one pencil. Disks and caps are solved mode
//! by mode; values of modes `m ≥ 1` are listed twice (the `cos mθ` and
//! `sin mθ` copies) before the merged list is sorted and truncated.

use crate::discretize::{build_planar, build_radial_shape, DiscretizeError, DomainSpec, OperatorPair, Shape};
use crate::eigensolve::{smallest_pairs, EigenError, EigenResult, SolverOptions};
use crate::spectrum::{Geometry, ProblemKind, Spectrum, SpectrumError, SpectrumTags};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("only {available} values available from {modes} modes, {requested} requested")]
    NotEnoughValues {
        requested: usize,
        available: usize,
        modes: usize,
    },
}

/// Per-pencil summary kept in solve metadata.
#[derive(Debug, Clone, Serialize)]
pub struct PencilReport {
    pub mode: Option<u32>,
    pub unknowns: usize,
    pub grid: serde_json::Value,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub raw_residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    #[serde(skip)]
    pub spectrum: Spectrum,
    pub pencils: Vec<PencilReport>,
    pub max_residual: f64,
    /// False when values from modes beyond `mode_count`, or beyond the
    /// number computed per mode, could fall inside the returned range.
    pub complete: bool,
}

pub fn pencil_for(
    pair: &OperatorPair,
    problem: ProblemKind,
    count: usize,
    options: &SolverOptions,
) -> Result<EigenResult, EigenError> {
    match problem {
        ProblemKind::Buckling => smallest_pairs(&pair.buckling_operator(), &pair.b, count, options),
        ProblemKind::Membrane => smallest_pairs(&pair.b, &pair.mass_matrix(), count, options),
    }
}

fn report(pair: &OperatorPair, r: &EigenResult) -> PencilReport {
    PencilReport {
        mode: pair.mode,
        unknowns: pair.dim(),
        grid: pair.grid_descriptor(),
        values: r.values.clone(),
        residuals: r.residuals.clone(),
        raw_residuals: r.raw_residuals.clone(),
        iterations: r.iterations,
    }
}

/// The `count` lowest eigenvalues of `problem` on `domain`.
pub fn solve_domain(
    domain: &DomainSpec,
    problem: ProblemKind,
    count: usize,
    options: &SolverOptions,
) -> Result<SolveOutcome, SolveError> {
    domain.validate()?;
    let geometry = match domain.shape {
        Shape::Cap { .. } => Geometry::Sphere,
        _ => Geometry::Euclidean,
    };
    let tags = SpectrumTags::new(problem, geometry, 2)
        .with_meta("source", "solve")
        .with_meta("domain", json!(domain.shape))
        .with_meta("resolution", domain.resolution);

    if domain.shape.is_planar() {
        let (pair, _) = build_planar(&domain.shape, domain.resolution)?;
        let r = pencil_for(&pair, problem, count, options)?;
        let spectrum = Spectrum::new(r.values.clone(), tags)?;
        return Ok(SolveOutcome {
            spectrum,
            max_residual: r.max_residual(),
            pencils: vec![report(&pair, &r)],
            complete: true,
        });
    }

    let mut merged: Vec<(f64, u32)> = Vec::new();
    let mut pencils = Vec::new();
    let mut complete = true;
    let mut lowest_of_last = f64::INFINITY;
    let mut mode_tops = Vec::new();
    for m in 0..domain.mode_count as u32 {
        let pair = build_radial_shape(&domain.shape, m, domain.resolution)?;
        let per_mode = count.min(pair.dim() / 4);
        let r = pencil_for(&pair, problem, per_mode, options)?;
        for &v in &r.values {
            merged.push((v, m));
            if m >= 1 {
                merged.push((v, m));
            }
        }
        if per_mode < count {
            mode_tops.push(*r.values.last().expect("at least one value per mode"));
        }
        lowest_of_last = r.values[0];
        pencils.push(report(&pair, &r));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if merged.len() < count {
        return Err(SolveError::NotEnoughValues {
            requested: count,
            available: merged.len(),
            modes: domain.mode_count,
        });
    }
    merged.truncate(count);
    let top = merged.last().expect("count ≥ 1").0;
    // the lowest value of each mode grows with m, so nothing from higher
    // modes can enter below the lowest value of the last computed mode
    if top > lowest_of_last || mode_tops.iter().any(|&t| t < top) {
        complete = false;
    }
    let spectrum = Spectrum::new(merged.iter().map(|x| x.0).collect::<Vec<_>>(), tags)?;
    let max_residual = pencils
        .iter()
        .flat_map(|p| p.residuals.iter().cloned())
        .fold(0.0, f64::max);
    Ok(SolveOutcome {
        spectrum,
        pencils,
        max_residual,
        complete,
    })
}
