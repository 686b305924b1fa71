//! Validated eigenvalue spectra and their file formats.
//!
//! JSON:
//!
//! ```json
//! {"problem": "buckling", "geometry": "euclidean", "dimension": 2, "values": [14.68, 26.37], "meta": {}}
//! ```
//!
//! CSV: optional `# key=value` header lines (`problem`, `geometry`,
//! `dimension` are required, anything else lands in `meta`), then one value
//! per line.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Default relative gap below which neighbouring eigenvalues are reported as
/// one multiplicity cluster.
pub const DEFAULT_MULTIPLICITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("empty spectrum")]
    EmptyInput,
    #[error("eigenvalue #{index} is not positive: {value}")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("eigenvalue #{index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension must be at least 2, got {0}")]
    BadDimension(u32),
    #[error("prefix length {k} out of range for {len} eigenvalues")]
    PrefixOutOfRange { k: usize, len: usize },
    #[error("parse error at {location}: {message}")]
    ParseError { location: String, message: String },
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("i/o error on {path}: {source}")]
    IoError {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// `Δ²u = −ΛΔu`, clamped.
    Buckling,
    /// `Δu = −λu`, Dirichlet.
    Membrane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Sphere,
}

macro_rules! lowercase_tag {
    ($ty:ty { $($variant:ident => $name:literal),+ }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = SpectrumError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($name => Ok(Self::$variant),)+
                    other => Err(SpectrumError::SchemaError(format!(
                        "unknown {} tag `{other}`",
                        stringify!($ty)
                    ))),
                }
            }
        }
    };
}

lowercase_tag!(ProblemKind { Buckling => "buckling", Membrane => "membrane" });
lowercase_tag!(Geometry { Euclidean => "euclidean", Sphere => "sphere" });

/// Tags attached to a raw list of eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTags {
    pub problem: ProblemKind,
    pub geometry: Geometry,
    pub dimension: u32,
    pub multiplicity_tolerance: f64,
    pub meta: Map<String, Value>,
}

impl SpectrumTags {
    pub fn new(problem: ProblemKind, geometry: Geometry, dimension: u32) -> Self {
        Self {
            problem,
            geometry,
            dimension,
            multiplicity_tolerance: DEFAULT_MULTIPLICITY_TOLERANCE,
            meta: Map::new(),
        }
    }

    pub fn euclidean_buckling(dimension: u32) -> Self {
        Self::new(ProblemKind::Buckling, Geometry::Euclidean, dimension)
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }
}

/// Ascending list of positive eigenvalues with its problem tags.
///
/// Immutable once built; construct through [`Spectrum::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    tags: SpectrumTags,
    above_threshold: bool,
}

impl Spectrum {
    /// Sorts and validates raw eigenvalues.
    ///
    /// A sphere spectrum in dimension `n ≥ 3` with some `Λ_i ≤ n − 2` is
    /// accepted but flagged (see [`Spectrum::above_sphere_threshold`]); the
    /// bound engine refuses the forms that divide by `Λ_i − (n − 2)`.
    pub fn new(raw: impl Into<Vec<f64>>, tags: SpectrumTags) -> Result<Self, SpectrumError> {
        let mut values = raw.into();
        if values.is_empty() {
            return Err(SpectrumError::EmptyInput);
        }
        if tags.dimension < 2 {
            return Err(SpectrumError::BadDimension(tags.dimension));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SpectrumError::NonFinite { index });
            }
            if value <= 0.0 {
                return Err(SpectrumError::NonPositiveEigenvalue { index, value });
            }
        }
        values.sort_by(f64::total_cmp);
        let above_threshold = match tags.geometry {
            Geometry::Sphere if tags.dimension >= 3 => {
                let floor = f64::from(tags.dimension - 2);
                values.iter().all(|&v| v > floor)
            }
            _ => true,
        };
        Ok(Self {
            values,
            tags,
            above_threshold,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tags(&self) -> &SpectrumTags {
        &self.tags
    }

    pub fn problem(&self) -> ProblemKind {
        self.tags.problem
    }

    pub fn geometry(&self) -> Geometry {
        self.tags.geometry
    }

    pub fn dimension(&self) -> u32 {
        self.tags.dimension
    }

    pub fn meta(&self) -> &Map<String, Value> {
        &self.tags.meta
    }

    /// False when this is a sphere spectrum with `n ≥ 3` and some
    /// `Λ_i ≤ n − 2`.
    pub fn above_sphere_threshold(&self) -> bool {
        self.above_threshold
    }

    /// Index ranges (0-based, half open) of runs whose neighbouring relative
    /// gaps `(Λ_{i+1} − Λ_i)/Λ_{i+1}` fall below the multiplicity tolerance.
    /// Singletons are omitted.
    pub fn multiplicity_clusters(&self) -> Vec<Range<usize>> {
        let tol = self.tags.multiplicity_tolerance;
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            let joined = i < self.values.len() && (self.values[i] - self.values[i - 1]) / self.values[i] < tol;
            if !joined {
                if i - start >= 2 {
                    clusters.push(start..i);
                }
                start = i;
            }
        }
        clusters
    }

    /// The first `k` eigenvalues.
    pub fn prefix(&self, k: usize) -> Result<SpectrumPrefix<'_>, SpectrumError> {
        if k == 0 || k > self.values.len() {
            return Err(SpectrumError::PrefixOutOfRange {
                k,
                len: self.values.len(),
            });
        }
        Ok(SpectrumPrefix { parent: self, k })
    }

    /// First `count` values as a new spectrum with the same tags.
    pub fn truncated(&self, count: usize) -> Spectrum {
        let count = count.min(self.values.len()).max(1);
        Spectrum {
            values: self.values[..count].to_vec(),
            tags: self.tags.clone(),
            above_threshold: self.above_threshold,
        }
    }

    /// Multiplies every eigenvalue by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Spectrum, SpectrumError> {
        Spectrum::new(self.values.iter().map(|v| v * t).collect::<Vec<_>>(), self.tags.clone())
    }

    pub fn to_json(&self) -> Value {
        let doc = SpectrumDoc {
            problem: self.tags.problem,
            geometry: self.tags.geometry,
            dimension: self.tags.dimension,
            values: self.values.clone(),
            meta: (!self.tags.meta.is_empty()).then(|| self.tags.meta.clone()),
        };
        serde_json::to_value(doc).expect("spectrum serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, SpectrumError> {
        let value: Value = serde_json::from_str(text).map_err(|e| SpectrumError::ParseError {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let doc: SpectrumDoc = serde_json::from_value(value).map_err(|e| SpectrumError::SchemaError(e.to_string()))?;
        let mut tags = SpectrumTags::new(doc.problem, doc.geometry, doc.dimension);
        tags.meta = doc.meta.unwrap_or_default();
        Spectrum::new(doc.values, tags)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# problem={}\n# geometry={}\n# dimension={}\n",
            self.tags.problem, self.tags.geometry, self.tags.dimension
        );
        for (key, value) in &self.tags.meta {
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {key}={}\n", text.replace('\n', " ")));
        }
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, SpectrumError> {
        let mut problem = None;
        let mut geometry = None;
        let mut dimension = None;
        let mut meta = Map::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let location = || format!("line {}", lineno + 1);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let Some((key, value)) = header.split_once('=') else {
                    continue;
                };
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "problem" => problem = Some(value.parse::<ProblemKind>()?),
                    "geometry" => geometry = Some(value.parse::<Geometry>()?),
                    "dimension" => {
                        dimension = Some(value.parse::<u32>().map_err(|e| SpectrumError::ParseError {
                            location: location(),
                            message: format!("dimension: {e}"),
                        })?)
                    }
                    _ => {
                        meta.insert(key.to_owned(), Value::String(value.to_owned()));
                    }
                }
                continue;
            }
            // tolerate a plain column header such as `value`
            if values.is_empty() && line.parse::<f64>().is_err() && line.chars().all(|c| c.is_alphabetic() || c == '_')
            {
                continue;
            }
            let field = line.split(',').next().unwrap_or("").trim();
            let v = field.parse::<f64>().map_err(|e| SpectrumError::ParseError {
                location: format!("{}, field 1", location()),
                message: format!("`{field}`: {e}"),
            })?;
            values.push(v);
        }
        let missing = |name: &str| SpectrumError::SchemaError(format!("missing `# {name}=` header"));
        let mut tags = SpectrumTags::new(
            problem.ok_or_else(|| missing("problem"))?,
            geometry.ok_or_else(|| missing("geometry"))?,
            dimension.ok_or_else(|| missing("dimension"))?,
        );
        tags.meta = meta;
        Spectrum::new(values, tags)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumDoc {
    problem: ProblemKind,
    geometry: Geometry,
    dimension: u32,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Map<String, Value>>,
}

/// The leading `k` eigenvalues of a spectrum.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumPrefix<'a> {
    parent: &'a Spectrum,
    k: usize,
}

impl<'a> SpectrumPrefix<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &'a [f64] {
        &self.parent.values[..self.k]
    }

    /// `Λ_k`, the largest eigenvalue in the prefix.
    pub fn last(&self) -> f64 {
        self.parent.values[self.k - 1]
    }

    pub fn parent(&self) -> &'a Spectrum {
        self.parent
    }

    /// `Λ_{k+1}` when the parent spectrum has it.
    pub fn next_known(&self) -> Option<f64> {
        self.parent.values.get(self.k).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Json,
    Csv,
}

impl FileFormat {
    /// Guess from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Json,
        }
    }
}

impl FromStr for FileFormat {
    type Err = SpectrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(FileFormat::Json),
            "csv" => Ok(FileFormat::Csv),
            other => Err(SpectrumError::SchemaError(format!("unknown format `{other}`"))),
        }
    }
}

pub fn read_spectrum_file(path: &Path, format: FileFormat) -> Result<Spectrum, SpectrumError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpectrumError::IoError {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        FileFormat::Json => Spectrum::from_json_str(&text),
        FileFormat::Csv => Spectrum::from_csv_str(&text),
    }
}

pub fn write_spectrum_file(spectrum: &Spectrum, path: &Path, format: FileFormat) -> Result<(), SpectrumError> {
    let text = match format {
        FileFormat::Json => {
            let mut s = serde_json::to_string_pretty(&spectrum.to_json()).expect("serializes");
            s.push('\n');
            s
        }
        FileFormat::Csv => spectrum.to_csv_string(),
    };
    std::fs::write(path, text).map_err(|source| SpectrumError::IoError {
        path: path.display().to_string(),
        source,
    })
}
