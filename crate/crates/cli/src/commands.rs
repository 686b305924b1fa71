//! One function per subcommand. Each returns the process exit code.

use buckling::bounds::{audit_all, envelope, low_order_bounds, next_upper_bound, write_audit_csv, AuditOptions};
use buckling::discretize::{build_planar, build_radial_shape, DomainSpec};
use buckling::eigensolve::SolverOptions;
use buckling::oracle::{bessel_zeros, disk_buckling_spectrum, disk_membrane_spectrum, rectangle_membrane_spectrum};
use buckling::probe::{refinement, Probe, ProbeReport, CONJECTURAL_THRESHOLD, PROVED_FLOOR};
use buckling::solve::solve_domain;
use buckling::spectrum::{read_spectrum_file, FileFormat};
use buckling::{BoundForm, Geometry, ProblemKind, Spectrum};
use serde_json::{json, Value};
use std::path::Path;
use std::time::Instant;

use crate::config::{AuditConfig, BoundConfig, Format, OracleConfig, OracleKind, ProbeConfig, SolveConfig};
use crate::error::{CliError, EXIT_OK, EXIT_VIOLATION};
use crate::output::{emit, pretty, write_plots, Series};

/// Summary lines go to stdout when the report has its own file and to
/// stderr otherwise, so stdout stays parseable.
fn summary(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn spectrum_text(s: &Spectrum, format: Format) -> String {
    match format {
        Format::Json => pretty(&s.to_json()),
        Format::Csv => s.to_csv_string(),
    }
}

fn read_spectrum(path: &Path) -> Result<Spectrum, CliError> {
    Ok(read_spectrum_file(path, FileFormat::from_path(path))?)
}

/// The requested forms, or every form that applies to `spectrum`.
fn select_forms(requested: Option<&[BoundForm]>, spectrum: &Spectrum) -> Result<Vec<BoundForm>, CliError> {
    match requested {
        Some(forms) => {
            for f in forms {
                f.check(spectrum)?;
            }
            let mut forms = forms.to_vec();
            forms.sort();
            forms.dedup();
            Ok(forms)
        }
        None => Ok(BoundForm::ALL
            .into_iter()
            .filter(|f| match f.check(spectrum) {
                Ok(()) => true,
                Err(e) => {
                    if f.compatible(spectrum.problem(), spectrum.geometry(), spectrum.dimension()) {
                        eprintln!("skipping {f}: {e}");
                    }
                    false
                }
            })
            .collect()),
    }
}

pub fn solve(c: &SolveConfig) -> Result<u8, CliError> {
    let spec = DomainSpec {
        shape: c.domain,
        resolution: c.resolution,
        mode_count: c.modes,
    };
    spec.validate()?;
    let options = SolverOptions {
        tol: c.tol,
        seed: c.seed,
        ..SolverOptions::default()
    };
    let started = Instant::now();
    let outcome = solve_domain(&spec, c.problem, c.count, &options)?;
    eprintln!("solved {} values in {:.2?}", c.count, started.elapsed());
    if !outcome.complete {
        eprintln!("warning: more azimuthal modes or values per mode may be needed; the list may have gaps");
    }
    emit(c.out.as_deref(), &spectrum_text(&outcome.spectrum, c.format))?;
    if let Some(meta) = &c.meta {
        let doc = json!({
            "config": c,
            "values": outcome.spectrum.values(),
            "complete": outcome.complete,
            "max_residual": outcome.max_residual,
            "pencils": outcome.pencils,
        });
        emit(Some(meta), &pretty(&doc))?;
    }
    if let Some(dir) = &c.dump {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        let io = |e: std::io::Error| CliError::Input(format!("{}: {e}", dir.display()));
        if c.domain.is_planar() {
            let (pair, _) = build_planar(&c.domain, c.resolution)?;
            pair.write_dump(dir, c.domain.name()).map_err(io)?;
        } else {
            for m in 0..c.modes as u32 {
                let pair = build_radial_shape(&c.domain, m, c.resolution)?;
                pair.write_dump(dir, &format!("{}_m{m}", c.domain.name())).map_err(io)?;
            }
        }
    }
    if let Some(dir) = &c.plot {
        let mut values = Series::new("spectrum", "index", "eigenvalue");
        values.points = outcome
            .spectrum
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64, *v))
            .collect();
        let mut series = vec![values];
        for p in &outcome.pencils {
            let name = match p.mode {
                Some(m) => format!("residuals_m{m}"),
                None => "residuals".to_owned(),
            };
            let mut s = Series::new(name, "index", "energy_residual");
            s.points = p
                .residuals
                .iter()
                .enumerate()
                .map(|(i, r)| ((i + 1) as f64, *r))
                .collect();
            series.push(s);
        }
        write_plots(dir, &format!("{} spectrum of {}", c.problem, c.domain.name()), &series)?;
    }
    Ok(EXIT_OK)
}

pub fn audit(c: &AuditConfig) -> Result<u8, CliError> {
    let spectrum = read_spectrum(&c.spectrum)?;
    let forms = select_forms(c.forms.as_deref(), &spectrum)?;
    let entries = audit_all(&spectrum, &forms, AuditOptions { rel_tol: c.rel_tol })?;
    let text = match c.format {
        Format::Json => pretty(&entries),
        Format::Csv => {
            let mut buf = Vec::new();
            write_audit_csv(&entries, &mut buf).map_err(|e| CliError::Input(e.to_string()))?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    emit(c.out.as_deref(), &text)?;

    let to_stdout = c.out.is_some();
    let mut violated = false;
    let mut series = Vec::new();
    for form in &forms {
        let rows: Vec<_> = entries.iter().filter(|e| e.form == *form).collect();
        let Some(worst) = rows.iter().min_by(|a, b| a.residual.total_cmp(&b.residual)) else {
            continue;
        };
        let bad = rows.iter().filter(|e| !e.satisfied).count();
        violated |= bad > 0;
        summary(
            to_stdout,
            &format!(
                "{:<13} min residual {:+.6e} at k={:<3} {} ({} entries)",
                form.tag(),
                worst.residual,
                worst.k,
                if bad == 0 {
                    "satisfied".to_owned()
                } else {
                    format!("VIOLATED {bad}")
                },
                rows.len()
            ),
        );
        let mut s = Series::new(format!("residual_{}", form.tag()), "k", "residual");
        s.points = rows.iter().map(|e| (e.k as f64, e.residual)).collect();
        series.push(s);
    }
    if let Some(dir) = &c.plot {
        write_plots(dir, "inequality residuals", &series)?;
    }
    Ok(if violated { EXIT_VIOLATION } else { EXIT_OK })
}

pub fn bound(c: &BoundConfig) -> Result<u8, CliError> {
    let spectrum = c.spectrum.as_deref().map(read_spectrum).transpose()?;
    let to_stdout = c.out.is_some();
    let mut rows = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    if let Some(s) = &spectrum {
        let forms = select_forms(c.forms.as_deref(), s)?;
        let ks: Vec<usize> = match &c.k {
            Some(ks) => {
                if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > s.len()) {
                    return Err(CliError::Input(format!(
                        "k = {bad} outside 1..={} available values",
                        s.len()
                    )));
                }
                ks.clone()
            }
            None => (1..=s.len()).collect(),
        };
        let mut actual = Series::new("actual", "k+1", "eigenvalue");
        for form in &forms {
            let mut line = Series::new(format!("bound_{}", form.tag()), "k+1", "upper_bound");
            for &k in &ks {
                if form.fixed_k(s.dimension()).is_some_and(|fk| fk != k) {
                    continue;
                }
                let prefix = s.prefix(k)?;
                let r = next_upper_bound(&prefix, *form)?;
                let next = prefix.next_known();
                summary(
                    to_stdout,
                    &format!(
                        "k={k:<3} {:<13} Λ_(k+1) ≤ {:.10e}   actual {}",
                        form.tag(),
                        r.upper_bound,
                        next.map_or("-".to_owned(), |v| format!("{v:.10e}"))
                    ),
                );
                line.points.push(((k + 1) as f64, r.upper_bound));
                rows.push(json!({
                    "k": k,
                    "form": form,
                    "upper_bound": r.upper_bound,
                    "gap_bound": r.gap_bound(prefix.last()),
                    "actual": next,
                    "holds": next.map(|v| v <= r.upper_bound),
                    "method": r.method,
                    "certificate": r.certificate,
                    "delta": r.delta,
                }));
            }
            series.push(line);
        }
        actual.points = s
            .values()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, v)| ((i + 1) as f64, *v))
            .collect();
        series.push(actual);
    }

    let mut envelopes = Vec::new();
    let mut low_order = Value::Null;
    if let Some(count) = c.envelope {
        let (lambda1, n, geometry) = match (&spectrum, c.lambda1) {
            (_, Some(l)) => (
                l,
                spectrum.as_ref().map_or(c.dimension, |s| s.dimension()),
                spectrum.as_ref().map_or(Geometry::Euclidean, |s| s.geometry()),
            ),
            (Some(s), None) => (s.values()[0], s.dimension(), s.geometry()),
            (None, None) => unreachable!("checked when resolving the config"),
        };
        let forms: Vec<BoundForm> = match &c.forms {
            Some(f) => f.clone(),
            None => match geometry {
                Geometry::Euclidean => BoundForm::EUCLID.to_vec(),
                Geometry::Sphere => vec![BoundForm::SphereN2, BoundForm::SphereMono, BoundForm::SphereWx],
            },
        };
        for form in forms {
            if form.fixed_k(n).is_some() || form == BoundForm::MembranePpw {
                continue;
            }
            if geometry == Geometry::Sphere && form == BoundForm::SphereN2 && n != 2 {
                continue;
            }
            let values = envelope(lambda1, n, form, count)?;
            let mut s = Series::new(format!("envelope_{}", form.tag()), "index", "bound");
            s.points = values.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
            series.push(s);
            summary(to_stdout, &format!("envelope {:<13} {:?}", form.tag(), values));
            envelopes.push(json!({ "form": form, "lambda1": lambda1, "dimension": n, "values": values }));
        }
        if geometry == Geometry::Euclidean {
            low_order = serde_json::to_value(low_order_bounds(lambda1, n)).expect("serialises");
        }
    }

    let doc = json!({
        "config": c,
        "bounds": rows,
        "envelopes": envelopes,
        "low_order": low_order,
    });
    emit(c.out.as_deref(), &pretty(&doc))?;
    if let Some(dir) = &c.plot {
        write_plots(dir, "upper bounds for the next eigenvalue", &series)?;
    }
    Ok(EXIT_OK)
}

fn probe_table(to_stdout: bool, report: &ProbeReport) {
    summary(
        to_stdout,
        &format!(
            "{} at resolution {}: Λ·Σ‖∇q‖² against the floor {:.4} and the threshold {}",
            report.domain.name(),
            report.resolution,
            PROVED_FLOOR,
            CONJECTURAL_THRESHOLD
        ),
    );
    summary(to_stdout, "  i  eigenvalue        L23        statistic");
    for p in &report.per_i {
        summary(
            to_stdout,
            &format!(
                "{:>3}  {:<16.8} {:+.6}  {:.6}",
                p.i, p.value, p.l23, p.conjecture_statistic
            ),
        );
    }
}

pub fn probe(c: &ProbeConfig) -> Result<u8, CliError> {
    let options = SolverOptions {
        tol: c.tol,
        seed: c.seed,
        ..SolverOptions::default()
    };
    let started = Instant::now();
    let report = Probe::solve(&c.domain, c.resolution, c.count, &options)?.report()?;
    let to_stdout = c.out.is_some();
    probe_table(to_stdout, &report);
    let mut doc = serde_json::to_value(&report).expect("serialises");
    let mut reports = vec![report];
    if c.refine {
        let fine = Probe::solve(&c.domain, 2 * c.resolution, c.count, &options)?.report()?;
        probe_table(to_stdout, &fine);
        let ratios = refinement(&reports[0], &fine);
        for e in &ratios.entries {
            summary(
                to_stdout,
                &format!(
                    "ratio i={} p={}: L21 {:.3}  L22 {:.3}  L22+boundary {:.3}  identity {:.3}",
                    e.i, e.p, e.l21_ratio, e.l22_ratio, e.l22_corrected_ratio, e.identity_defect_ratio
                ),
            );
        }
        doc["refinement"] = json!({ "fine": fine, "ratios": ratios });
        reports.push(fine);
    }
    eprintln!("probe finished in {:.2?}", started.elapsed());
    doc["config"] = serde_json::to_value(c).expect("serialises");
    emit(c.out.as_deref(), &pretty(&doc))?;
    if let Some(dir) = &c.plot {
        let mut series = Vec::new();
        for r in &reports {
            let mut stat = Series::new(format!("statistic_{}", r.resolution), "i", "conjecture_statistic");
            stat.points = r.per_i.iter().map(|p| (p.i as f64, p.conjecture_statistic)).collect();
            let mut l23 = Series::new(format!("l23_{}", r.resolution), "i", "L23");
            l23.points = r.per_i.iter().map(|p| (p.i as f64, p.l23)).collect();
            series.push(stat);
            series.push(l23);
            for axis in 1..=2 {
                let mut l21 = Series::new(format!("l21_p{axis}_{}", r.resolution), "i", "L21");
                l21.points = r
                    .entries
                    .iter()
                    .filter(|e| e.p == axis)
                    .map(|e| (e.i as f64, e.l21))
                    .collect();
                let mut l22 = Series::new(format!("l22_p{axis}_{}", r.resolution), "i", "L22");
                l22.points = r
                    .entries
                    .iter()
                    .filter(|e| e.p == axis)
                    .map(|e| (e.i as f64, e.l22))
                    .collect();
                series.push(l21);
                series.push(l22);
            }
        }
        write_plots(dir, &format!("probe diagnostics on {}", c.domain.name()), &series)?;
    }
    Ok(EXIT_OK)
}

pub fn oracle(c: &OracleConfig) -> Result<u8, CliError> {
    let (text, points, title) = if let Some(m) = c.zeros {
        let zeros = bessel_zeros(m, c.count as u32)?;
        let text = match c.format {
            Format::Json => pretty(&json!({ "order": m, "zeros": zeros })),
            Format::Csv => {
                let mut s = format!("# order={m}\n");
                for z in &zeros {
                    s.push_str(&format!("{z:?}\n"));
                }
                s
            }
        };
        (text, zeros, format!("zeros of J_{m}"))
    } else {
        let kind = c.spectrum.expect("checked when resolving the config");
        let s = match kind {
            OracleKind::DiskBuckling => disk_buckling_spectrum(c.count)?,
            OracleKind::DiskMembrane => disk_membrane_spectrum(c.count)?,
            OracleKind::RectangleMembrane => rectangle_membrane_spectrum(c.a, c.b, c.count)?,
        };
        let title = match s.problem() {
            ProblemKind::Buckling => "reference buckling spectrum",
            ProblemKind::Membrane => "reference membrane spectrum",
        };
        (spectrum_text(&s, c.format), s.values().to_vec(), title.to_owned())
    };
    emit(c.out.as_deref(), &text)?;
    if let Some(dir) = &c.plot {
        let mut s = Series::new("values", "index", "value");
        s.points = points.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
        write_plots(dir, &title, &[s])?;
    }
    Ok(EXIT_OK)
}
