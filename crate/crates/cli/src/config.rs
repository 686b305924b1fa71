//! Run configuration: flags, an optional JSON file mirroring them, and the
//! defaults table. Flags override the file; the file overrides defaults.

use buckling::discretize::Shape;
use buckling::eigensolve::{DEFAULT_SEED, DEFAULT_TOL};
use buckling::{BoundForm, FileFormat, ProblemKind};
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Every default in one place.
pub mod defaults {
    pub const RADIAL_NODES: usize = 400;
    pub const PLANAR_RESOLUTION: usize = 128;
    pub const PROBE_RESOLUTION: usize = 64;
    pub const MODES: usize = 8;
    pub const COUNT: usize = 8;
    pub const PROBE_COUNT: usize = 4;
    pub const AUDIT_REL_TOL: f64 = 1e-12;
    pub const DIMENSION: u32 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Rectangle,
    Disk,
    Lshape,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    DiskBuckling,
    DiskMembrane,
    RectangleMembrane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl From<Format> for FileFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => FileFormat::Json,
            Format::Csv => FileFormat::Csv,
        }
    }
}

fn format_for(explicit: Option<Format>, out: Option<&Path>) -> Format {
    explicit.unwrap_or(match out.map(FileFormat::from_path) {
        Some(FileFormat::Csv) => Format::Csv,
        _ => Format::Json,
    })
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: buckling::SpectrumError| e.to_string())
}

fn parse_form(s: &str) -> Result<BoundForm, String> {
    s.parse().map_err(|e: buckling::BoundError| e.to_string())
}

// Raw argument structs. Every field is optional so that a config file can
// supply it; `resolve` fills in defaults and checks what is required.

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Domain shape
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    /// Rectangle side along x
    #[arg(long)]
    pub a: Option<f64>,
    /// Rectangle side along y
    #[arg(long)]
    pub b: Option<f64>,
    /// Cap aperture θ₀ in radians
    #[arg(long)]
    pub aperture: Option<f64>,
    /// Cells per unit length (planar) or radial nodes (disk, cap)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Azimuthal modes m = 0..modes−1 for disks and caps
    #[arg(long)]
    pub modes: Option<usize>,
    /// Number of eigenvalues
    #[arg(long)]
    pub count: Option<usize>,
    /// buckling or membrane
    #[arg(long, value_parser = parse_problem)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spectrum file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Metadata file; defaults to `<out>.meta.json`
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Directory for plot series and their manifest
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Directory for matrix dumps
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditArgs {
    /// Spectrum file (JSON or CSV)
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Comma-separated form tags; all compatible forms when absent
    #[arg(long, value_delimiter = ',', value_parser = parse_form)]
    pub forms: Option<Vec<BoundForm>>,
    /// Relative tolerance for counting an entry as satisfied
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundArgs {
    /// Spectrum file (JSON or CSV)
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Comma-separated form tags; all compatible forms when absent
    #[arg(long, value_delimiter = ',', value_parser = parse_form)]
    pub forms: Option<Vec<BoundForm>>,
    /// Prefix lengths; every available k when absent
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Also iterate bounds from Λ₁ alone up to this many values
    #[arg(long)]
    pub envelope: Option<usize>,
    /// Λ₁ for an envelope without a spectrum file
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Dimension for an envelope without a spectrum file
    #[arg(long)]
    pub dimension: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Number of eigenfunctions probed
    #[arg(long)]
    pub count: Option<usize>,
    /// Also run at twice the resolution and report ratios
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleArgs {
    /// Reference spectrum to emit
    #[arg(long, value_enum)]
    pub spectrum: Option<OracleKind>,
    /// Print zeros of J_m instead
    #[arg(long)]
    pub zeros: Option<u32>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Overlays the flags that were given onto the file's object.
pub fn merge<T: Serialize + DeserializeOwned>(flags: T, file: Option<Map<String, Value>>) -> Result<T, CliError> {
    let Some(mut base) = file else {
        return Ok(flags);
    };
    let Value::Object(given) = serde_json::to_value(&flags).expect("arguments serialise") else {
        unreachable!("argument structs serialise to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Input(format!("config file: {e}")))
}

/// Reads a config file; a `subcommand` key, if present, must match.
pub fn load_file(path: &Path, subcommand: &str) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Input(format!("{}: expected a JSON object", path.display())));
    };
    match map.remove("subcommand") {
        None => {}
        Some(Value::String(s)) if s == subcommand => {}
        Some(other) => {
            return Err(CliError::Input(format!(
                "{}: config is for subcommand {other}, not `{subcommand}`",
                path.display()
            )))
        }
    }
    Ok(map)
}

// Effective configurations, echoed to stderr and embedded in reports.

#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub domain: Shape,
    pub resolution: usize,
    pub modes: usize,
    pub count: usize,
    pub problem: ProblemKind,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub meta: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditConfig {
    pub spectrum: PathBuf,
    pub forms: Option<Vec<BoundForm>>,
    pub rel_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundConfig {
    pub spectrum: Option<PathBuf>,
    pub forms: Option<Vec<BoundForm>>,
    pub k: Option<Vec<usize>>,
    pub envelope: Option<usize>,
    pub lambda1: Option<f64>,
    pub dimension: u32,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeConfig {
    pub domain: Shape,
    pub resolution: usize,
    pub count: usize,
    pub refine: bool,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleConfig {
    pub spectrum: Option<OracleKind>,
    pub zeros: Option<u32>,
    pub count: usize,
    pub a: f64,
    pub b: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub plot: Option<PathBuf>,
}

fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing required argument --{flag}"))
}

fn shape(kind: DomainKind, a: Option<f64>, b: Option<f64>, aperture: Option<f64>) -> Result<Shape, CliError> {
    Ok(match kind {
        DomainKind::Rectangle => Shape::Rectangle {
            a: a.unwrap_or(1.0),
            b: b.unwrap_or(1.0),
        },
        DomainKind::Disk => Shape::Disk,
        DomainKind::Lshape => Shape::Lshape,
        DomainKind::Cap => Shape::Cap {
            aperture: aperture.ok_or_else(|| missing("aperture"))?,
        },
    })
}

impl SolveArgs {
    pub fn resolve(self) -> Result<SolveConfig, CliError> {
        let kind = self.domain.ok_or_else(|| missing("domain"))?;
        let domain = shape(kind, self.a, self.b, self.aperture)?;
        let resolution = self.resolution.unwrap_or(if domain.is_radial() {
            defaults::RADIAL_NODES
        } else {
            defaults::PLANAR_RESOLUTION
        });
        let meta = self.meta.or_else(|| {
            self.out
                .as_ref()
                .map(|o| PathBuf::from(format!("{}.meta.json", o.display())))
        });
        Ok(SolveConfig {
            domain,
            resolution,
            modes: self.modes.unwrap_or(defaults::MODES),
            count: self.count.unwrap_or(defaults::COUNT),
            problem: self.problem.unwrap_or(ProblemKind::Buckling),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            format: format_for(self.format, self.out.as_deref()),
            out: self.out,
            meta,
            plot: self.plot,
            dump: self.dump,
        })
    }
}

impl AuditArgs {
    pub fn resolve(self) -> Result<AuditConfig, CliError> {
        let spectrum = self.spectrum.ok_or_else(|| missing("spectrum"))?;
        Ok(AuditConfig {
            spectrum,
            forms: self.forms,
            rel_tol: self.rel_tol.unwrap_or(defaults::AUDIT_REL_TOL),
            format: format_for(self.format, self.out.as_deref()),
            out: self.out,
            plot: self.plot,
        })
    }
}

impl BoundArgs {
    pub fn resolve(self) -> Result<BoundConfig, CliError> {
        if self.spectrum.is_none() && (self.envelope.is_none() || self.lambda1.is_none()) {
            return Err(missing("spectrum (or --envelope with --lambda1)"));
        }
        Ok(BoundConfig {
            spectrum: self.spectrum,
            forms: self.forms,
            k: self.k,
            envelope: self.envelope,
            lambda1: self.lambda1,
            dimension: self.dimension.unwrap_or(defaults::DIMENSION),
            out: self.out,
            plot: self.plot,
        })
    }
}

impl ProbeArgs {
    pub fn resolve(self) -> Result<ProbeConfig, CliError> {
        let kind = self.domain.ok_or_else(|| missing("domain"))?;
        let domain = shape(kind, self.a, self.b, None)?;
        if !domain.is_planar() {
            return Err(CliError::Input(format!(
                "probe needs a planar lattice; {} is only solved mode by mode",
                domain.name()
            )));
        }
        Ok(ProbeConfig {
            domain,
            resolution: self.resolution.unwrap_or(defaults::PROBE_RESOLUTION),
            count: self.count.unwrap_or(defaults::PROBE_COUNT),
            refine: self.refine.unwrap_or(false),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out,
            plot: self.plot,
        })
    }
}

impl OracleArgs {
    pub fn resolve(self) -> Result<OracleConfig, CliError> {
        match (self.spectrum, self.zeros) {
            (None, None) => return Err(missing("spectrum (or --zeros)")),
            (Some(_), Some(_)) => return Err(CliError::Usage("--spectrum and --zeros are mutually exclusive".into())),
            _ => {}
        }
        Ok(OracleConfig {
            spectrum: self.spectrum,
            zeros: self.zeros,
            count: self.count.unwrap_or(defaults::COUNT),
            a: self.a.unwrap_or(1.0),
            b: self.b.unwrap_or(1.0),
            format: format_for(self.format, self.out.as_deref()),
            out: self.out,
            plot: self.plot,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flags_override_file() {
        let file = json!({"domain": "disk", "resolution": 200, "count": 4})
            .as_object()
            .unwrap()
            .clone();
        let flags = SolveArgs {
            count: Some(12),
            ..Default::default()
        };
        let merged = merge(flags, Some(file)).unwrap();
        assert_eq!(merged.domain, Some(DomainKind::Disk));
        assert_eq!(merged.resolution, Some(200));
        assert_eq!(merged.count, Some(12));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let file = json!({"domian": "disk"}).as_object().unwrap().clone();
        assert!(matches!(
            merge(SolveArgs::default(), Some(file)),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn defaults_depend_on_geometry() {
        let disk = SolveArgs {
            domain: Some(DomainKind::Disk),
            ..Default::default()
        };
        assert_eq!(disk.resolve().unwrap().resolution, defaults::RADIAL_NODES);
        let square = SolveArgs {
            domain: Some(DomainKind::Rectangle),
            out: Some("x.csv".into()),
            ..Default::default()
        };
        let c = square.resolve().unwrap();
        assert_eq!(c.resolution, defaults::PLANAR_RESOLUTION);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.meta.unwrap(), PathBuf::from("x.csv.meta.json"));
    }

    #[test]
    fn probe_rejects_disk() {
        let args = ProbeArgs {
            domain: Some(DomainKind::Disk),
            ..Default::default()
        };
        assert!(matches!(args.resolve(), Err(CliError::Input(_))));
    }
}
