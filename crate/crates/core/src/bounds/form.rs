use crate::spectrum::{Geometry, ProblemKind, Spectrum};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::BoundError;

/// One universal eigenvalue inequality.
///
/// Every form is written as `lhs(Λ) ≤ rhs(Λ)` where `Λ` is a candidate for
/// `Λ_{k+1}` and the sums run over a prefix `Λ_1 ≤ … ≤ Λ_k`; `g_i = Λ − Λ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundForm {
    /// `Σ g_i² ≤ 4(n+2)/n² · Σ g_i Λ_i`
    #[serde(rename = "EUCLID_CY")]
    EuclidCy,
    /// `Σ g_i² ≤ 4(n+4/3)/n² · Σ g_i Λ_i`
    #[serde(rename = "EUCLID_THIS")]
    EuclidThis,
    /// `Σ g_i² ≤ 4/n · Σ g_i Λ_i`, conjectural.
    #[serde(rename = "EUCLID_CONJ")]
    EuclidConj,
    /// `n Σ g_i² ≤ (n+4/3) Σ δ_i g_i² + Σ g_i Λ_i / δ_i`, δ non-increasing.
    #[serde(rename = "EUCLID_MONO")]
    EuclidMono,
    /// Constant-δ sphere inequality.
    #[serde(rename = "SPHERE_WX")]
    SphereWx,
    /// Non-increasing δ_i sphere inequality.
    #[serde(rename = "SPHERE_MONO")]
    SphereMono,
    /// `Σ g_i² ≤ Σ g_i Λ_i²` on `S²`.
    #[serde(rename = "SPHERE_N2")]
    SphereN2,
    /// `λ_{k+1} − λ_k ≤ 4/(kn) Σ λ_i` for the fixed membrane.
    #[serde(rename = "MEMBRANE_PPW")]
    MembranePpw,
    /// `Λ_2 ≤ 3 Λ_1`, planar.
    #[serde(rename = "LOW_PPW2")]
    LowPpw2,
    /// `Λ_2 ≤ (n²+8n+20)/(n+2)² · Λ_1`
    #[serde(rename = "LOW_HILE_YEH")]
    LowHileYeh,
    /// `Σ_{i=1}^{n} Λ_{i+1} ≤ (n+4) Λ_1`
    #[serde(rename = "LOW_ASHBAUGH")]
    LowAshbaugh,
}

impl BoundForm {
    pub const ALL: [BoundForm; 11] = [
        BoundForm::EuclidCy,
        BoundForm::EuclidThis,
        BoundForm::EuclidConj,
        BoundForm::EuclidMono,
        BoundForm::SphereWx,
        BoundForm::SphereMono,
        BoundForm::SphereN2,
        BoundForm::MembranePpw,
        BoundForm::LowPpw2,
        BoundForm::LowHileYeh,
        BoundForm::LowAshbaugh,
    ];

    pub const EUCLID: [BoundForm; 3] = [BoundForm::EuclidCy, BoundForm::EuclidThis, BoundForm::EuclidConj];

    pub fn tag(self) -> &'static str {
        match self {
            BoundForm::EuclidCy => "EUCLID_CY",
            BoundForm::EuclidThis => "EUCLID_THIS",
            BoundForm::EuclidConj => "EUCLID_CONJ",
            BoundForm::EuclidMono => "EUCLID_MONO",
            BoundForm::SphereWx => "SPHERE_WX",
            BoundForm::SphereMono => "SPHERE_MONO",
            BoundForm::SphereN2 => "SPHERE_N2",
            BoundForm::MembranePpw => "MEMBRANE_PPW",
            BoundForm::LowPpw2 => "LOW_PPW2",
            BoundForm::LowHileYeh => "LOW_HILE_YEH",
            BoundForm::LowAshbaugh => "LOW_ASHBAUGH",
        }
    }

    /// Coefficient `c` of the quadratic forms `Σ g_i² ≤ c Σ g_i Λ_i`.
    pub fn euclid_coefficient(self, n: u32) -> Option<f64> {
        let n = f64::from(n);
        match self {
            BoundForm::EuclidCy => Some(4.0 * (n + 2.0) / (n * n)),
            BoundForm::EuclidThis => Some(4.0 * (n + 4.0 / 3.0) / (n * n)),
            BoundForm::EuclidConj => Some(4.0 / n),
            _ => None,
        }
    }

    /// Forms quantified over a δ parameter.
    pub fn takes_delta(self) -> bool {
        matches!(
            self,
            BoundForm::EuclidMono | BoundForm::SphereWx | BoundForm::SphereMono
        )
    }

    /// Forms whose δ sequence must be non-increasing.
    pub fn monotone_delta(self) -> bool {
        matches!(self, BoundForm::EuclidMono | BoundForm::SphereMono)
    }

    /// Low-order forms only make sense at one prefix length.
    pub fn fixed_k(self, n: u32) -> Option<usize> {
        match self {
            BoundForm::LowPpw2 | BoundForm::LowHileYeh => Some(1),
            BoundForm::LowAshbaugh => Some(n as usize),
            _ => None,
        }
    }

    /// Tag/geometry/dimension compatibility, ignoring the sphere threshold.
    pub fn compatible(self, problem: ProblemKind, geometry: Geometry, n: u32) -> bool {
        use BoundForm::*;
        match self {
            EuclidCy | EuclidThis | EuclidConj | EuclidMono | LowHileYeh | LowAshbaugh => {
                geometry == Geometry::Euclidean && problem == ProblemKind::Buckling
            }
            LowPpw2 => geometry == Geometry::Euclidean && problem == ProblemKind::Buckling && n == 2,
            SphereWx | SphereMono => geometry == Geometry::Sphere && problem == ProblemKind::Buckling,
            SphereN2 => geometry == Geometry::Sphere && problem == ProblemKind::Buckling && n == 2,
            MembranePpw => geometry == Geometry::Euclidean && problem == ProblemKind::Membrane,
        }
    }

    /// Full admissibility check against a spectrum.
    pub fn check(self, spectrum: &Spectrum) -> Result<(), BoundError> {
        if !self.compatible(spectrum.problem(), spectrum.geometry(), spectrum.dimension()) {
            return Err(BoundError::FormMismatch {
                form: self,
                reason: format!(
                    "{} {} spectrum in dimension {}",
                    spectrum.geometry(),
                    spectrum.problem(),
                    spectrum.dimension()
                ),
            });
        }
        if self == BoundForm::SphereMono && !spectrum.above_sphere_threshold() {
            return Err(BoundError::SphereBelowThreshold);
        }
        Ok(())
    }
}

impl fmt::Display for BoundForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BoundForm {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        BoundForm::ALL
            .into_iter()
            .find(|f| f.tag() == wanted)
            .ok_or_else(|| BoundError::UnknownForm(s.to_owned()))
    }
}
