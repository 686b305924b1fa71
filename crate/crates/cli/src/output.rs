//! Report files and plot-ready series.

use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Writes `text` to `path`, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s
}

/// One `(x, y)` series destined for a two-column text file.
pub struct Series {
    pub name: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, x_label: &'static str, y_label: &'static str) -> Self {
        Self {
            name: name.into(),
            x_label,
            y_label,
            points: Vec::new(),
        }
    }
}

/// Writes `<name>.dat` per series and `manifest.json` into `dir`.
pub fn write_plots(dir: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut entries = Vec::new();
    for s in series {
        let file = format!("{}.dat", s.name);
        let mut text = format!("# {} {}\n", s.x_label, s.y_label);
        for (x, y) in &s.points {
            text.push_str(&format!("{x:?} {y:?}\n"));
        }
        let path = dir.join(&file);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        entries.push(json!({
            "name": s.name,
            "file": file,
            "x": s.x_label,
            "y": s.y_label,
            "points": s.points.len(),
        }));
    }
    let manifest = json!({ "title": title, "series": entries });
    let path = dir.join("manifest.json");
    std::fs::write(&path, pretty(&manifest)).map_err(|e| io_error(&path, e))
}
