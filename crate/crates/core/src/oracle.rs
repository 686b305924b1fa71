//! Analytic reference spectra.
//!
//! Clamped disk buckling modes have the form `u = αJ_m(√Λ r) + βr^m`
//! (times `cos mθ` or `sin mθ`). The two boundary conditions
//! `u(1) = u'(1) = 0` have a nontrivial solution exactly when
//! `√Λ J_m'(√Λ) − m J_m(√Λ) = 0`, i.e. `J_{m+1}(√Λ) = 0`. Hence
//! `Λ = j_{m+1,s}²`, doubly degenerate for `m ≥ 1`. The Dirichlet membrane
//! on the disk has `λ = j_{m,s}²`, and the rectangle `π²(p²/a² + q²/b²)`.
//!
//! Bessel functions are evaluated here rather than taken from a library so
//! that the reference values can be audited on their own.

use crate::spectrum::{Geometry, ProblemKind, Spectrum, SpectrumTags};
use std::f64::consts::PI;
use thiserror::Error;

pub const MAX_ORDER: u32 = 60;
pub const MAX_ARGUMENT: f64 = 200.0;
pub const MAX_RANK: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Bessel argument out of range: order {order}, x = {x}")]
    RangeError { order: u32, x: f64 },
    #[error("could not bracket zero {rank} of J_{order}")]
    BracketingFailure { order: u32, rank: u32 },
    #[error("requested {requested} values, at most {max} available")]
    TooMany { requested: usize, max: usize },
}

/// First-kind Bessel function `J_m(x)` for `0 ≤ x ≤ 200`, `0 ≤ m ≤ 60`.
///
/// Power series where its terms decrease from the start (`x ≤ 12` or
/// `x² < 4(m+1)`), Miller's backward recurrence normalised by
/// `J_0 + 2ΣJ_{2k} = 1` otherwise. Absolute accuracy is about `1e-14`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64, OracleError> {
    if m > MAX_ORDER || !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(OracleError::RangeError { order: m, x });
    }
    Ok(bessel_j_unchecked(m, x))
}

fn bessel_j_unchecked(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x <= 12.0 || x * x < 4.0 * (f64::from(m) + 1.0) {
        series(m, x)
    } else {
        miller(m, x)
    }
}

fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for j in 1..=m {
        term *= half / f64::from(j);
    }
    let q = half * half;
    let mut total = term;
    let mf = f64::from(m);
    for k in 1..500 {
        let kf = k as f64;
        term *= -q / (kf * (kf + mf));
        total += term;
        if term.abs() <= 1e-17 * total.abs() {
            break;
        }
    }
    total
}

fn miller(m: u32, x: f64) -> f64 {
    let top = x.max(f64::from(m));
    let mut start = (top + 30.0 + 12.0 * top.sqrt()) as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut wanted = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // cur = J_k, next = J_{k+1}; step down to J_{k-1}
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order == m as usize {
            wanted = cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            wanted *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    wanted / norm
}

/// `J_m'(x) = (J_{m-1}(x) − J_{m+1}(x))/2`, `J_0' = −J_1`.
fn bessel_j_prime(m: u32, x: f64) -> f64 {
    if m == 0 {
        -bessel_j_unchecked(1, x)
    } else {
        0.5 * (bessel_j_unchecked(m - 1, x) - bessel_j_unchecked(m + 1, x))
    }
}

/// McMahon's large-zero expansion `β − (4m²−1)/(8β)`,
/// `β = (s + m/2 − 1/4)π`. Good for `s ≫ m`.
pub fn mcmahon_guess(m: u32, s: u32) -> f64 {
    let beta = (f64::from(s) + 0.5 * f64::from(m) - 0.25) * PI;
    let mu = 4.0 * f64::from(m) * f64::from(m);
    beta - (mu - 1.0) / (8.0 * beta)
}

/// Refines a sign-changing bracket of `J_m` to `1e-12` relative.
fn refine(m: u32, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = bessel_j_unchecked(m, lo);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        let fmid = bessel_j_unchecked(m, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    // one Newton polish, kept only if it stays in the bracket
    let x = 0.5 * (lo + hi);
    let polished = x - bessel_j_unchecked(m, x) / bessel_j_prime(m, x);
    if polished > lo - 1e-13 * hi && polished < hi + 1e-13 * hi {
        polished
    } else {
        x
    }
}

/// The first `count` positive zeros of `J_m`, located by scanning for sign
/// changes from below `j_{m,1}` and refined by bisection plus Newton.
pub fn bessel_zeros(m: u32, count: u32) -> Result<Vec<f64>, OracleError> {
    zeros_scan(m, |zeros, _| zeros.len() < count as usize).and_then(|z| {
        if z.len() < count as usize {
            Err(OracleError::BracketingFailure { order: m, rank: count })
        } else {
            Ok(z)
        }
    })
}

/// All zeros of `J_m` below `limit`.
pub fn bessel_zeros_below(m: u32, limit: f64) -> Result<Vec<f64>, OracleError> {
    let mut z = zeros_scan(m, |_, x| x < limit)?;
    z.retain(|&x| x < limit);
    Ok(z)
}

fn zeros_scan(m: u32, mut more: impl FnMut(&[f64], f64) -> bool) -> Result<Vec<f64>, OracleError> {
    if m > MAX_ORDER {
        return Err(OracleError::RangeError { order: m, x: 0.0 });
    }
    // j_{m,1} > √(m(m+2)); consecutive zeros are more than 2.5 apart
    let mf = f64::from(m);
    let mut x = (mf * (mf + 2.0)).sqrt().max(0.5);
    let step = 0.125;
    let mut fx = bessel_j_unchecked(m, x);
    let mut zeros = Vec::new();
    while more(&zeros, x) {
        let next = x + step;
        if next > MAX_ARGUMENT {
            break;
        }
        let fnext = bessel_j_unchecked(m, next);
        if fnext == 0.0 {
            zeros.push(next);
        } else if fx != 0.0 && (fx < 0.0) != (fnext < 0.0) {
            zeros.push(refine(m, x, next));
        }
        x = next;
        fx = fnext;
    }
    Ok(zeros)
}

/// The `s`-th positive zero `j_{m,s}`.
pub fn bessel_zero(m: u32, s: u32) -> Result<f64, OracleError> {
    if s == 0 || s > MAX_RANK {
        return Err(OracleError::BracketingFailure { order: m, rank: s });
    }
    Ok(bessel_zeros(m, s)?[s as usize - 1])
}

/// Table of `j_{m,s}` for `m ≤ max_order`, `s ≤ max_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselZeroTable {
    rows: Vec<Vec<f64>>,
}

impl BesselZeroTable {
    pub fn new(max_order: u32, max_rank: u32) -> Result<Self, OracleError> {
        let rows = (0..=max_order)
            .map(|m| bessel_zeros(m, max_rank))
            .collect::<Result<_, _>>()?;
        Ok(Self { rows })
    }

    /// `j_{m,s}`, `s` counted from 1.
    pub fn zero(&self, m: u32, s: u32) -> f64 {
        self.rows[m as usize][s as usize - 1]
    }

    pub fn max_order(&self) -> u32 {
        self.rows.len() as u32 - 1
    }

    pub fn max_rank(&self) -> u32 {
        self.rows[0].len() as u32
    }

    /// `j_{m,s} < j_{m+1,s} < j_{m,s+1}` across the whole table.
    pub fn interlaces(&self) -> bool {
        let (mm, ss) = (self.max_order(), self.max_rank());
        (0..mm).all(|m| {
            (1..ss).all(|s| self.zero(m, s) < self.zero(m + 1, s) && self.zero(m + 1, s) < self.zero(m, s + 1))
        }) && self.rows.iter().all(|r| r.windows(2).all(|w| w[0] < w[1]))
    }
}

/// One `(order, rank, value)` entry of a merged mode table, with its
/// multiplicity in the full 2D problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeValue {
    pub azimuthal: u32,
    pub rank: u32,
    pub value: f64,
}

/// Squares of zeros of `J_{m + order_shift}` for all `m ≥ 0`, each `m ≥ 1`
/// entry listed twice, sorted, truncated to `count`.
fn squared_zero_spectrum(order_shift: u32, count: usize) -> Result<Vec<ModeValue>, OracleError> {
    let mut limit = 8.0f64;
    loop {
        let mut modes = Vec::new();
        let mut m = 0u32;
        while m + order_shift <= MAX_ORDER {
            let zeros = bessel_zeros_below(m + order_shift, limit)?;
            if zeros.is_empty() {
                break;
            }
            for (s, z) in zeros.into_iter().enumerate() {
                let entry = ModeValue {
                    azimuthal: m,
                    rank: s as u32 + 1,
                    value: z * z,
                };
                modes.push(entry);
                if m >= 1 {
                    modes.push(entry);
                }
            }
            m += 1;
        }
        if modes.len() >= count {
            modes.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.azimuthal.cmp(&b.azimuthal)));
            modes.truncate(count);
            return Ok(modes);
        }
        if limit >= MAX_ARGUMENT {
            return Err(OracleError::TooMany {
                requested: count,
                max: modes.len(),
            });
        }
        limit = (limit * 1.5).min(MAX_ARGUMENT);
    }
}

/// Clamped disk buckling spectrum `{j_{m+1,s}²}` (unit radius).
pub fn disk_buckling_modes(count: usize) -> Result<Vec<ModeValue>, OracleError> {
    if count > 200 {
        return Err(OracleError::TooMany {
            requested: count,
            max: 200,
        });
    }
    squared_zero_spectrum(1, count)
}

pub fn disk_buckling_spectrum(count: usize) -> Result<Spectrum, OracleError> {
    let values: Vec<f64> = disk_buckling_modes(count)?.iter().map(|m| m.value).collect();
    Ok(tagged(values, ProblemKind::Buckling, "oracle:disk_buckling"))
}

/// Dirichlet membrane spectrum of the unit disk `{j_{m,s}²}`.
pub fn disk_membrane_spectrum(count: usize) -> Result<Spectrum, OracleError> {
    if count > 500 {
        return Err(OracleError::TooMany {
            requested: count,
            max: 500,
        });
    }
    let values: Vec<f64> = squared_zero_spectrum(0, count)?.iter().map(|m| m.value).collect();
    Ok(tagged(values, ProblemKind::Membrane, "oracle:disk_membrane"))
}

/// Dirichlet membrane spectrum of the `a × b` rectangle.
pub fn rectangle_membrane_spectrum(a: f64, b: f64, count: usize) -> Result<Spectrum, OracleError> {
    if count > 500 {
        return Err(OracleError::TooMany {
            requested: count,
            max: 500,
        });
    }
    let value = |p: u32, q: u32| PI * PI * ((f64::from(p) / a).powi(2) + (f64::from(q) / b).powi(2));
    // every (p, q) with value below the count-th candidate of the first
    // `count` columns and rows is enumerated
    let mut values = Vec::new();
    let side = count as u32 + 1;
    let cutoff = {
        let mut firsts: Vec<f64> = (1..=side)
            .flat_map(|p| (1..=side).map(move |q| (p, q)))
            .map(|(p, q)| value(p, q))
            .collect();
        firsts.sort_by(f64::total_cmp);
        firsts[count.max(1) - 1]
    };
    let pmax = ((cutoff / (PI * PI)).sqrt() * a).ceil() as u32 + 1;
    let qmax = ((cutoff / (PI * PI)).sqrt() * b).ceil() as u32 + 1;
    for p in 1..=pmax {
        for q in 1..=qmax {
            let v = value(p, q);
            if v <= cutoff {
                values.push(v);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    Ok(tagged(values, ProblemKind::Membrane, "oracle:rectangle_membrane"))
}

fn tagged(values: Vec<f64>, problem: ProblemKind, source: &str) -> Spectrum {
    let tags = SpectrumTags::new(problem, Geometry::Euclidean, 2).with_meta("source", source);
    Spectrum::new(values, tags).expect("oracle values are positive")
}
