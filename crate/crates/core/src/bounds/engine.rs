use serde::{Deserialize, Serialize};

use super::delta::{golden_section, monotone_objective, optimize_delta_monotone, DeltaSequence};
use super::{BoundError, BoundForm};
use crate::spectrum::{Geometry, ProblemKind, Spectrum, SpectrumError, SpectrumPrefix, SpectrumTags};
use crate::sum::{self, Neumaier};

/// Relative tolerance of the bisection on `inf_δ rhs − lhs`.
pub const BISECTION_RTOL: f64 = 1e-9;
/// Relative tolerance of the golden-section search over a constant δ.
pub const GOLDEN_RTOL: f64 = 1e-10;
/// Discriminants down to this (relative) negative value are treated as zero.
pub const DISCRIMINANT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    /// An entry is satisfied when `residual ≥ −rel_tol · max(|lhs|, |rhs|, 1)`.
    pub rel_tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12 }
    }
}

/// One inequality evaluated at one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub form: BoundForm,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means the inequality is violated.
    pub residual: f64,
    pub satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSequence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    ClosedRoot,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `rhs − lhs` at the returned bound.
    pub residual: f64,
    /// For closed roots both roots of the quadratic; for bisection the last
    /// feasible and first infeasible candidates.
    pub bracket: [f64; 2],
}

/// Upper bound for `Λ_{k+1}` extracted from a prefix of length `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub form: BoundForm,
    pub k: usize,
    pub upper_bound: f64,
    pub method: BoundMethod,
    pub certificate: Certificate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSequence>,
}

impl BoundResult {
    /// Upper bound for the gap `Λ_{k+1} − Λ_k`.
    pub fn gap_bound(&self, last: f64) -> f64 {
        self.upper_bound - last
    }
}

fn check_candidate(values: &[f64], candidate: f64) -> Result<(), BoundError> {
    let last = *values.last().expect("non-empty prefix");
    if !(candidate >= last) {
        return Err(BoundError::CandidateBelowPrefix { candidate, last });
    }
    Ok(())
}

fn check_k(form: BoundForm, k: usize, n: u32) -> Result<(), BoundError> {
    match form.fixed_k(n) {
        Some(expected) if expected != k => Err(BoundError::IndexNotApplicable { form, k, expected }),
        _ => Ok(()),
    }
}

/// `(lhs, a, b)` of the forms `lhs ≤ Σ a_i δ_i + b_i / δ_i`.
fn mono_coefficients(form: BoundForm, values: &[f64], n: u32, lam: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let nf = f64::from(n);
    let shift = nf - 2.0;
    let mut lhs = Neumaier::new();
    let mut a = Vec::with_capacity(values.len());
    let mut b = Vec::with_capacity(values.len());
    for &li in values {
        let g = lam - li;
        match form {
            BoundForm::EuclidMono => {
                lhs.add(nf * g * g);
                a.push((nf + 4.0 / 3.0) * g * g);
                b.push(g * li);
            }
            BoundForm::SphereMono => {
                let above = li - shift;
                lhs.add(2.0 * g * g + shift * g * g / above);
                a.push(g * g * (li - shift / above));
                b.push(g * (li + shift * shift / 4.0));
            }
            _ => unreachable!("not a monotone-δ form"),
        }
    }
    (lhs.value(), a, b)
}

fn wx_lhs(values: &[f64], lam: f64) -> f64 {
    sum::sum(values.iter().map(|&li| 2.0 * (lam - li) * (lam - li)))
}

fn wx_rhs(values: &[f64], n: u32, lam: f64, delta: f64) -> f64 {
    let shift = f64::from(n) - 2.0;
    let quad = sum::sum(values.iter().map(|&li| {
        let g = lam - li;
        g * g * (delta * li + delta * delta * (li - shift) / (4.0 * (delta * li + shift)))
    }));
    let lin = sum::sum(values.iter().map(|&li| (lam - li) * (li + shift * shift / 4.0)));
    quad + lin / delta
}

/// `(lhs, rhs)` at a candidate, for a given δ where the form takes one.
fn evaluate(form: BoundForm, values: &[f64], n: u32, lam: f64, delta: Option<&[f64]>) -> (f64, f64) {
    let nf = f64::from(n);
    let k = values.len();
    let gaps = || values.iter().map(move |&li| lam - li);
    match form {
        BoundForm::EuclidCy | BoundForm::EuclidThis | BoundForm::EuclidConj => {
            let c = form.euclid_coefficient(n).unwrap();
            let lhs = sum::sum(gaps().map(|g| g * g));
            let rhs = c * sum::sum(values.iter().map(|&li| (lam - li) * li));
            (lhs, rhs)
        }
        BoundForm::EuclidMono | BoundForm::SphereMono => {
            let (lhs, a, b) = mono_coefficients(form, values, n, lam);
            (lhs, monotone_objective(&a, &b, delta.expect("δ checked")))
        }
        BoundForm::SphereWx => (
            wx_lhs(values, lam),
            wx_rhs(values, n, lam, delta.expect("δ checked")[0]),
        ),
        BoundForm::SphereN2 => {
            let lhs = sum::sum(gaps().map(|g| g * g));
            let rhs = sum::sum(values.iter().map(|&li| (lam - li) * li * li));
            (lhs, rhs)
        }
        BoundForm::MembranePpw => {
            let rhs = 4.0 / (k as f64 * nf) * sum::sum(values.iter().copied());
            (lam - values[k - 1], rhs)
        }
        BoundForm::LowPpw2 => (lam, 3.0 * values[0]),
        BoundForm::LowHileYeh => (lam, hile_yeh_coefficient(n) * values[0]),
        BoundForm::LowAshbaugh => {
            let lhs = sum::sum(values[1..].iter().copied().chain(std::iter::once(lam)));
            (lhs, (nf + 4.0) * values[0])
        }
    }
}

fn hile_yeh_coefficient(n: u32) -> f64 {
    let n = f64::from(n);
    (n * n + 8.0 * n + 20.0) / ((n + 2.0) * (n + 2.0))
}

/// `inf_δ rhs(Λ, δ)` and the δ attaining it; forms without δ just evaluate.
fn best_rhs(
    form: BoundForm,
    values: &[f64],
    n: u32,
    lam: f64,
) -> Result<(f64, f64, Option<DeltaSequence>), BoundError> {
    let k = values.len();
    match form {
        BoundForm::EuclidMono | BoundForm::SphereMono => {
            let (lhs, a, b) = mono_coefficients(form, values, n, lam);
            // terms with Λ_i = Λ vanish for every δ; they sit at the tail
            let active = values.iter().take_while(|&&li| li < lam).count();
            if active == 0 {
                return Ok((lhs, 0.0, Some(DeltaSequence::constant(1.0, k)?)));
            }
            if let Some(index) = a[..active].iter().position(|&x| !(x > 0.0)) {
                return Err(BoundError::UnboundedObjective { index });
            }
            let opt = optimize_delta_monotone(&a[..active], &b[..active])?;
            let rhs = monotone_objective(&a[..active], &b[..active], opt.values());
            let mut full = opt.values().to_vec();
            let tail = *full.last().unwrap();
            full.resize(k, tail);
            Ok((lhs, rhs, Some(DeltaSequence::new(full)?)))
        }
        BoundForm::SphereWx => {
            let lhs = wx_lhs(values, lam);
            if values.iter().all(|&li| li == lam) {
                return Ok((lhs, 0.0, Some(DeltaSequence::constant(1.0, k)?)));
            }
            let (d, rhs) = golden_section(|d| wx_rhs(values, n, lam, d), GOLDEN_RTOL)?;
            Ok((lhs, rhs, Some(DeltaSequence::constant(d, k)?)))
        }
        _ => {
            let (lhs, rhs) = evaluate(form, values, n, lam, None);
            Ok((lhs, rhs, None))
        }
    }
}

fn entry(
    form: BoundForm,
    k: usize,
    lhs: f64,
    rhs: f64,
    delta: Option<DeltaSequence>,
    options: AuditOptions,
) -> AuditEntry {
    let residual = rhs - lhs;
    let atol = options.rel_tol * lhs.abs().max(rhs.abs()).max(1.0);
    AuditEntry {
        form,
        k,
        lhs,
        rhs,
        residual,
        satisfied: residual >= -atol,
        delta,
    }
}

/// Evaluates one inequality at candidate `Λ` for a prefix, with default
/// audit tolerance.
pub fn residual(
    prefix: &SpectrumPrefix<'_>,
    candidate: f64,
    form: BoundForm,
    delta: Option<&DeltaSequence>,
) -> Result<AuditEntry, BoundError> {
    residual_with(prefix, candidate, form, delta, AuditOptions::default())
}

pub fn residual_with(
    prefix: &SpectrumPrefix<'_>,
    candidate: f64,
    form: BoundForm,
    delta: Option<&DeltaSequence>,
    options: AuditOptions,
) -> Result<AuditEntry, BoundError> {
    let spectrum = prefix.parent();
    form.check(spectrum)?;
    let n = spectrum.dimension();
    let values = prefix.values();
    check_k(form, values.len(), n)?;
    check_candidate(values, candidate)?;
    let delta_values: Option<Vec<f64>> = match (form.takes_delta(), delta) {
        (true, None) => return Err(BoundError::MissingDelta(form)),
        (false, Some(_)) => return Err(BoundError::UnexpectedDelta(form)),
        (false, None) => None,
        (true, Some(d)) => {
            let k = values.len();
            if form == BoundForm::SphereWx {
                if d.values().windows(2).any(|w| w[0] != w[1]) {
                    return Err(BoundError::NonConstantDelta);
                }
                if d.len() != 1 && d.len() != k {
                    return Err(BoundError::DeltaLength {
                        got: d.len(),
                        expected: k,
                    });
                }
                Some(vec![d.values()[0]; k])
            } else {
                if d.len() != k {
                    return Err(BoundError::DeltaLength {
                        got: d.len(),
                        expected: k,
                    });
                }
                if !d.is_non_increasing() {
                    return Err(BoundError::NonMonotoneDelta);
                }
                Some(d.values().to_vec())
            }
        }
    };
    let (lhs, rhs) = evaluate(form, values, n, candidate, delta_values.as_deref());
    Ok(entry(form, values.len(), lhs, rhs, delta.cloned(), options))
}

/// Minimises the constant-δ right-hand side of SPHERE_WX at candidate `Λ`.
/// Returns `(δ*, rhs_min)`.
pub fn optimize_delta_fixed(
    prefix: &SpectrumPrefix<'_>,
    candidate: f64,
    form: BoundForm,
) -> Result<(f64, f64), BoundError> {
    if form != BoundForm::SphereWx {
        return Err(BoundError::FormMismatch {
            form,
            reason: "constant-δ optimisation (SPHERE_WX only)".into(),
        });
    }
    form.check(prefix.parent())?;
    check_candidate(prefix.values(), candidate)?;
    let (_, rhs, delta) = best_rhs(form, prefix.values(), prefix.parent().dimension(), candidate)?;
    Ok((delta.expect("δ form").values()[0], rhs))
}

fn quadratic_larger_root(a: f64, b: f64, c: f64) -> Result<(f64, f64), BoundError> {
    // a x² − b x + c with a, b > 0
    let disc = b * b - 4.0 * a * c;
    let relative = disc / (b * b);
    if relative < -DISCRIMINANT_RTOL {
        return Err(BoundError::NegativeDiscriminant { relative });
    }
    let root = (b + disc.max(0.0).sqrt()) / (2.0 * a);
    let other = if root > 0.0 { c / (a * root) } else { root };
    Ok((other, root))
}

fn closed_result(form: BoundForm, values: &[f64], n: u32, bracket: (f64, f64)) -> BoundResult {
    let (lhs, rhs) = evaluate(form, values, n, bracket.1, None);
    BoundResult {
        form,
        k: values.len(),
        upper_bound: bracket.1,
        method: BoundMethod::ClosedRoot,
        certificate: Certificate {
            residual: rhs - lhs,
            bracket: [bracket.0, bracket.1],
        },
        delta: None,
    }
}

/// Larger root of `kΛ² − (2+c)S₁Λ + (1+c)S₂` for the three quadratic
/// Euclidean forms.
pub fn next_upper_bound_euclid(prefix: &SpectrumPrefix<'_>, form: BoundForm) -> Result<BoundResult, BoundError> {
    let Some(c) = form.euclid_coefficient(prefix.parent().dimension()) else {
        return Err(BoundError::FormMismatch {
            form,
            reason: "closed-root bound (EUCLID_CY, EUCLID_THIS, EUCLID_CONJ only)".into(),
        });
    };
    form.check(prefix.parent())?;
    let values = prefix.values();
    let s1 = sum::sum(values.iter().copied());
    let s2 = sum::sum(values.iter().map(|v| v * v));
    let roots = quadratic_larger_root(values.len() as f64, (2.0 + c) * s1, (1.0 + c) * s2)?;
    Ok(closed_result(form, values, prefix.parent().dimension(), roots))
}

/// Bound for the δ-quantified forms by bisection on `inf_δ rhs − lhs`, and
/// the closed root `kΛ² − (2S₁+S₂)Λ + (S₂+S₃)` for SPHERE_N2.
pub fn next_upper_bound_mono(prefix: &SpectrumPrefix<'_>, form: BoundForm) -> Result<BoundResult, BoundError> {
    let spectrum = prefix.parent();
    form.check(spectrum)?;
    let n = spectrum.dimension();
    let values = prefix.values();
    match form {
        BoundForm::SphereN2 => {
            let s1 = sum::sum(values.iter().copied());
            let s2 = sum::sum(values.iter().map(|v| v * v));
            let s3 = sum::sum(values.iter().map(|v| v * v * v));
            let roots = quadratic_larger_root(values.len() as f64, 2.0 * s1 + s2, s2 + s3)?;
            Ok(closed_result(form, values, n, roots))
        }
        BoundForm::EuclidMono | BoundForm::SphereMono | BoundForm::SphereWx => bisect(form, values, n),
        _ => Err(BoundError::FormMismatch {
            form,
            reason: "δ-form bound (EUCLID_MONO, SPHERE_MONO, SPHERE_WX, SPHERE_N2 only)".into(),
        }),
    }
}

fn bisect(form: BoundForm, values: &[f64], n: u32) -> Result<BoundResult, BoundError> {
    let last = *values.last().unwrap();
    let margin = |lam: f64| -> Result<(f64, f64, Option<DeltaSequence>), BoundError> {
        let (lhs, rhs, delta) = best_rhs(form, values, n, lam)?;
        Ok((rhs - lhs, lhs.abs().max(rhs.abs()).max(1.0), delta))
    };
    let (g0, scale0, _) = margin(last)?;
    if g0 < -1e-12 * scale0 {
        return Err(BoundError::InfeasiblePrefix);
    }
    let mut lo = last;
    let mut step = last.max(1.0);
    let mut hi = last + step;
    let mut doublings = 0;
    while margin(hi)?.0 >= 0.0 {
        lo = hi;
        step *= 2.0;
        hi = last + step;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(BoundError::BracketingFailure(format!(
                "{form}: no infeasible candidate found above {last}"
            )));
        }
    }
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin(mid)?.0 >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (residual, _, delta) = margin(hi)?;
    Ok(BoundResult {
        form,
        k: values.len(),
        upper_bound: hi,
        method: BoundMethod::Bisection,
        certificate: Certificate {
            residual,
            bracket: [lo, hi],
        },
        delta,
    })
}

/// Upper bound for `Λ_{k+1}` from any form.
pub fn next_upper_bound(prefix: &SpectrumPrefix<'_>, form: BoundForm) -> Result<BoundResult, BoundError> {
    let spectrum = prefix.parent();
    let n = spectrum.dimension();
    let values = prefix.values();
    match form {
        BoundForm::EuclidCy | BoundForm::EuclidThis | BoundForm::EuclidConj => next_upper_bound_euclid(prefix, form),
        BoundForm::EuclidMono | BoundForm::SphereMono | BoundForm::SphereWx | BoundForm::SphereN2 => {
            next_upper_bound_mono(prefix, form)
        }
        BoundForm::MembranePpw | BoundForm::LowPpw2 | BoundForm::LowHileYeh | BoundForm::LowAshbaugh => {
            form.check(spectrum)?;
            check_k(form, values.len(), n)?;
            let k = values.len() as f64;
            let nf = f64::from(n);
            let bound = match form {
                BoundForm::MembranePpw => values[values.len() - 1] + 4.0 / (k * nf) * sum::sum(values.iter().copied()),
                BoundForm::LowPpw2 => 3.0 * values[0],
                BoundForm::LowHileYeh => hile_yeh_coefficient(n) * values[0],
                _ => (nf + 4.0) * values[0] - sum::sum(values[1..].iter().copied()),
            };
            Ok(closed_result(form, values, n, (bound, bound)))
        }
    }
}

/// Iterated bounds from `Λ_1` alone: `B_1 = Λ_1`, `B_{k+1}` is the bound
/// computed from the prefix `(B_1, …, B_k)`.
pub fn envelope(lambda1: f64, n: u32, form: BoundForm, count: usize) -> Result<Vec<f64>, BoundError> {
    let tags = match form {
        BoundForm::EuclidCy | BoundForm::EuclidThis | BoundForm::EuclidConj | BoundForm::EuclidMono => {
            SpectrumTags::new(ProblemKind::Buckling, Geometry::Euclidean, n)
        }
        BoundForm::SphereWx | BoundForm::SphereMono | BoundForm::SphereN2 => {
            SpectrumTags::new(ProblemKind::Buckling, Geometry::Sphere, n)
        }
        BoundForm::MembranePpw => SpectrumTags::new(ProblemKind::Membrane, Geometry::Euclidean, n),
        _ => {
            return Err(BoundError::FormMismatch {
                form,
                reason: "envelope (low-order forms do not iterate)".into(),
            })
        }
    };
    let mut values = vec![lambda1];
    while values.len() < count {
        let spectrum = Spectrum::new(values.clone(), tags.clone())?;
        let bound = next_upper_bound(&spectrum.prefix(values.len())?, form)?;
        values.push(bound.upper_bound);
    }
    if count == 0 {
        values.clear();
    }
    Ok(values)
}

/// The classical low-order bounds from `Λ_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowOrderBounds {
    /// `3Λ_1`, planar only.
    pub ppw2: Option<f64>,
    /// Bound on `Λ_2`.
    pub hile_yeh: f64,
    /// Bound on `Σ_{i=1}^{n} Λ_{i+1}`.
    pub ashbaugh_sum: f64,
}

pub fn low_order_bounds(lambda1: f64, n: u32) -> LowOrderBounds {
    LowOrderBounds {
        ppw2: (n == 2).then_some(3.0 * lambda1),
        hile_yeh: hile_yeh_coefficient(n) * lambda1,
        ashbaugh_sum: (f64::from(n) + 4.0) * lambda1,
    }
}

/// Every compatible form at every `k = 1 … len−1`, candidate `Λ_{k+1}`.
///
/// δ-quantified forms are evaluated at the δ minimising the right-hand side,
/// which is recorded in the entry. Entries are ordered by `(k, form)`.
pub fn audit_all(
    spectrum: &Spectrum,
    forms: &[BoundForm],
    options: AuditOptions,
) -> Result<Vec<AuditEntry>, BoundError> {
    if spectrum.len() < 2 {
        return Err(SpectrumError::PrefixOutOfRange {
            k: 1,
            len: spectrum.len(),
        }
        .into());
    }
    let n = spectrum.dimension();
    let mut selected: Vec<BoundForm> = forms
        .iter()
        .copied()
        .filter(|f| f.compatible(spectrum.problem(), spectrum.geometry(), n))
        .collect();
    selected.sort();
    selected.dedup();
    for form in &selected {
        form.check(spectrum)?;
    }
    let mut out = Vec::new();
    for k in 1..spectrum.len() {
        let values = &spectrum.values()[..k];
        let candidate = spectrum.values()[k];
        for &form in &selected {
            if form.fixed_k(n).is_some_and(|fk| fk != k) {
                continue;
            }
            let (lhs, rhs, delta) = best_rhs(form, values, n, candidate)?;
            out.push(entry(form, k, lhs, rhs, delta, options));
        }
    }
    Ok(out)
}

/// CSV with columns `form,k,lhs,rhs,residual,satisfied,delta`; δ values are
/// `;`-separated.
pub fn write_audit_csv<W: std::io::Write>(entries: &[AuditEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["form", "k", "lhs", "rhs", "residual", "satisfied", "delta"])?;
    for e in entries {
        let delta = e
            .delta
            .as_ref()
            .map(|d| {
                d.values()
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        w.write_record([
            e.form.tag().to_owned(),
            e.k.to_string(),
            format!("{:?}", e.lhs),
            format!("{:?}", e.rhs),
            format!("{:?}", e.residual),
            e.satisfied.to_string(),
            delta,
        ])?;
    }
    w.flush()?;
    Ok(())
}
