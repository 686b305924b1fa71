//! Acceptance criteria, one line each. Runs as a plain binary so the
//! summary is printed in a fixed order; exits non-zero if any line fails.

use buckling::bounds::{
    audit_all, monotone_objective, next_upper_bound, optimize_delta_monotone, AuditEntry, AuditOptions,
};
use buckling::discretize::{build_membrane, build_planar, build_radial_shape, DomainSpec, Shape};
use buckling::eigensolve::{dense_oracle, smallest_pairs, SolverOptions};
use buckling::linalg::{CsrMatrix, SymmetricOperator};
use buckling::oracle::disk_buckling_spectrum;
use buckling::probe::{refinement, Probe, PROVED_FLOOR};
use buckling::solve::solve_domain;
use buckling::{BoundForm, Geometry, ProblemKind, Spectrum, SpectrumTags};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn solve(shape: Shape, resolution: usize, modes: usize, problem: ProblemKind, count: usize) -> Spectrum {
    let spec = DomainSpec {
        shape,
        resolution,
        mode_count: modes,
    };
    solve_domain(&spec, problem, count, &opts())
        .expect("solve succeeds")
        .spectrum
}

fn buckle(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_buckle"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn c1_disk_solver() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let o = buckle(
        &[
            "solve",
            "--domain",
            "disk",
            "--resolution",
            "400",
            "--modes",
            "8",
            "--count",
            "8",
            "--out",
            "d.json",
        ],
        dir.path(),
    );
    let elapsed = started.elapsed().as_secs_f64();
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let text = std::fs::read_to_string(dir.path().join("d.json")).unwrap();
    let got = Spectrum::from_json_str(&text).unwrap();
    let want = disk_buckling_spectrum(8).unwrap();
    let worst = got
        .values()
        .iter()
        .zip(want.values())
        .map(|(g, w)| rel(*g, *w))
        .fold(0.0, f64::max);
    let detail = format!("max rel err {worst:.2e} (limit 2e-3), {elapsed:.2} s (limit 10 s)");
    if got.len() == 8 && worst <= 2e-3 && elapsed < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c2_membrane() -> Outcome {
    let square = solve(Shape::Rectangle { a: 1.0, b: 1.0 }, 128, 1, ProblemKind::Membrane, 1).values()[0];
    let disk = solve(Shape::Disk, 400, 1, ProblemKind::Membrane, 1).values()[0];
    let (es, ed) = (rel(square, 2.0 * PI * PI), rel(disk, 2.404_825_557_695_773f64.powi(2)));
    let detail = format!("square λ₁ {square:.6} (rel {es:.2e}), disk λ₁ {disk:.6} (rel {ed:.2e}), limit 5e-3");
    if es <= 5e-3 && ed <= 5e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn worst_relative(entries: &[AuditEntry], form: BoundForm) -> f64 {
    entries
        .iter()
        .filter(|e| e.form == form)
        .map(|e| e.residual / e.lhs.abs().max(e.rhs.abs()).max(1e-300))
        .fold(f64::INFINITY, f64::min)
}

fn c3_euclidean_audit() -> Outcome {
    let spectra = [
        ("disk", solve(Shape::Disk, 400, 8, ProblemKind::Buckling, 10)),
        (
            "square",
            solve(Shape::Rectangle { a: 1.0, b: 1.0 }, 128, 1, ProblemKind::Buckling, 8),
        ),
        ("lshape", solve(Shape::Lshape, 128, 1, ProblemKind::Buckling, 8)),
    ];
    let forms = [BoundForm::EuclidThis, BoundForm::EuclidCy, BoundForm::EuclidConj];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s) in &spectra {
        let entries = audit_all(s, &forms, AuditOptions { rel_tol: 1e-9 }).unwrap();
        let this = worst_relative(&entries, BoundForm::EuclidThis);
        let cy = worst_relative(&entries, BoundForm::EuclidCy);
        let conj = worst_relative(&entries, BoundForm::EuclidConj);
        ok &= this >= -1e-9 && cy >= -1e-9;
        parts.push(format!(
            "{name} min rel residual THIS {this:.3} CY {cy:.3} (CONJ {conj:.3})"
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c4_caps() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for aperture in [0.5, 1.0, PI / 2.0] {
        let s = solve(Shape::Cap { aperture }, 400, 8, ProblemKind::Buckling, 8);
        assert_eq!(s.geometry(), Geometry::Sphere);
        let entries = audit_all(
            &s,
            &[BoundForm::SphereMono, BoundForm::SphereN2],
            AuditOptions { rel_tol: 1e-9 },
        )
        .unwrap();
        let mono = worst_relative(&entries, BoundForm::SphereMono);
        let n2 = worst_relative(&entries, BoundForm::SphereN2);
        ok &= mono >= -1e-9 && n2 >= -1e-9;
        let mut sharper = true;
        for k in 1..=s.len() {
            let p = s.prefix(k).unwrap();
            let m = next_upper_bound(&p, BoundForm::SphereMono).unwrap().upper_bound;
            let w = next_upper_bound(&p, BoundForm::SphereWx).unwrap().upper_bound;
            sharper &= m <= w * (1.0 + 1e-12);
        }
        ok &= sharper;
        parts.push(format!(
            "θ₀={aperture:.3}: MONO {mono:.3}, N2 {n2:.3}, MONO ≤ WX {sharper}"
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c5_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for l1 in [0.37, 1.0, 14.681_970_642_123_9, 52.345_6, 1.0e3] {
        let e = Spectrum::new(vec![l1], SpectrumTags::euclidean_buckling(2)).unwrap();
        let p = e.prefix(1).unwrap();
        for (form, c) in [
            (BoundForm::EuclidCy, 4.0),
            (BoundForm::EuclidThis, 10.0 / 3.0),
            (BoundForm::EuclidConj, 2.0),
        ] {
            worst = worst.max(rel(next_upper_bound(&p, form).unwrap().upper_bound, (1.0 + c) * l1));
        }
        let ppw = next_upper_bound(&p, BoundForm::LowPpw2).unwrap().upper_bound;
        worst = worst.max(rel(ppw, 3.0 * l1));
        worst = worst.max(rel(
            next_upper_bound(&p, BoundForm::EuclidConj).unwrap().upper_bound,
            ppw,
        ));
        let s = Spectrum::new(vec![l1], SpectrumTags::new(ProblemKind::Buckling, Geometry::Sphere, 2)).unwrap();
        let n2 = next_upper_bound(&s.prefix(1).unwrap(), BoundForm::SphereN2)
            .unwrap()
            .upper_bound;
        worst = worst.max(rel(n2, l1 + l1 * l1));
    }
    let detail = format!("max rel deviation {worst:.2e} (limit 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Each next value is drawn between the last one and the conjecture bound,
/// so the prefix satisfies every Euclidean form.
fn random_prefix(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(1..=10);
    let mut values = vec![rng.gen_range(0.1..100.0)];
    while values.len() < k {
        let s = Spectrum::new(values.clone(), SpectrumTags::euclidean_buckling(2)).unwrap();
        let bound = next_upper_bound(&s.prefix(values.len()).unwrap(), BoundForm::EuclidConj)
            .unwrap()
            .upper_bound;
        let last = *values.last().unwrap();
        values.push(last + rng.gen_range(0.0..1.0) * (bound - last));
    }
    values
}

fn c6_dominance_homogeneity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut order_failures = 0;
    let mut worst_scaling = 0.0f64;
    for _ in 0..1000 {
        let values = random_prefix(&mut rng);
        let t = rng.gen_range(0.01..100.0);
        let s = Spectrum::new(values.clone(), SpectrumTags::euclidean_buckling(2)).unwrap();
        let st = s.scaled(t).unwrap();
        let k = values.len();
        let (p, pt) = (s.prefix(k).unwrap(), st.prefix(k).unwrap());
        let b = |form| next_upper_bound(&p, form).unwrap().upper_bound;
        let (conj, this, cy) = (
            b(BoundForm::EuclidConj),
            b(BoundForm::EuclidThis),
            b(BoundForm::EuclidCy),
        );
        if !(conj <= this && this <= cy) {
            order_failures += 1;
        }
        for (form, v) in [
            (BoundForm::EuclidConj, conj),
            (BoundForm::EuclidThis, this),
            (BoundForm::EuclidCy, cy),
        ] {
            let scaled = next_upper_bound(&pt, form).unwrap().upper_bound;
            worst_scaling = worst_scaling.max(rel(scaled, t * v));
        }
    }
    let detail = format!(
        "{order_failures} ordering failures in 1000, worst dilation deviation {worst_scaling:.2e} (limit 1e-10)"
    );
    if order_failures == 0 && worst_scaling <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Minimum of `Σ a_i δ_i + b_i/δ_i` over non-increasing tuples drawn from a
/// sorted grid. Every tuple is covered: the running suffix minimum carries
/// the best admissible choice of the earlier coordinates.
fn grid_minimum(a: &[f64], b: &[f64], grid: &[f64]) -> (f64, Vec<f64>) {
    let n = grid.len();
    let k = a.len();
    let mut best = vec![0.0; n];
    let mut choice = vec![vec![0usize; n]; k];
    for i in 0..k {
        let mut next = vec![0.0; n];
        // suffix minimum of the previous layer over indices ≥ j
        let (mut run, mut arg) = (f64::INFINITY, n - 1);
        for j in (0..n).rev() {
            if i > 0 && best[j] < run {
                run = best[j];
                arg = j;
            }
            let prev = if i == 0 { 0.0 } else { run };
            next[j] = a[i] * grid[j] + b[i] / grid[j] + prev;
            choice[i][j] = arg;
        }
        best = next;
    }
    let (mut j, mut value) = (0, f64::INFINITY);
    for (idx, v) in best.iter().enumerate() {
        if *v < value {
            value = *v;
            j = idx;
        }
    }
    let mut tuple = vec![0.0; k];
    for i in (0..k).rev() {
        tuple[i] = grid[j];
        j = choice[i][j];
    }
    (value, tuple)
}

fn c7_pav_vs_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut beaten = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let a: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..10.0)).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..10.0)).collect();
        let coarse: Vec<f64> = (1..=11_000).map(|i| i as f64 * 1e-3).collect();
        let (_, at) = grid_minimum(&a, &b, &coarse);
        let mut fine: Vec<f64> = at
            .iter()
            .flat_map(|&d| (-2000..=2000).map(move |j| d + j as f64 * 1e-6))
            .filter(|&d| d > 0.0)
            .collect();
        fine.sort_by(f64::total_cmp);
        fine.dedup();
        let (grid_value, _) = grid_minimum(&a, &b, &fine);
        let pav = optimize_delta_monotone(&a, &b).unwrap();
        let ours = monotone_objective(&a, &b, pav.values());
        if ours > grid_value * (1.0 + 1e-12) {
            beaten += 1;
        }
        worst = worst.max(rel(ours, grid_value));
    }
    let detail = format!("worst rel objective gap {worst:.2e} (limit 1e-6), grid better than PAV in {beaten} of 200");
    if worst <= 1e-6 && beaten == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn compare<A: SymmetricOperator + ?Sized>(a: &A, b: &CsrMatrix, count: usize) -> f64 {
    let dense = dense_oracle(a, b, count).unwrap();
    let iter = smallest_pairs(a, b, count, &opts()).unwrap();
    iter.values
        .iter()
        .zip(&dense.values)
        .map(|(x, y)| rel(*x, *y))
        .fold(0.0, f64::max)
}

fn c8_dense_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut operators = 0;
    let radial = [
        Shape::Disk,
        Shape::Cap { aperture: 0.5 },
        Shape::Cap { aperture: 1.0 },
        Shape::Cap { aperture: PI / 2.0 },
    ];
    for shape in &radial {
        for nodes in [16, 50, 200, 400, 600] {
            for m in [0, 1, 3, 7] {
                let pair = build_radial_shape(shape, m, nodes).unwrap();
                let count = 4.min(nodes / 4);
                worst = worst.max(compare(&pair.buckling_operator(), &pair.b, count));
                worst = worst.max(compare(&pair.b, &pair.mass_matrix(), count));
                operators += 2;
            }
        }
    }
    let planar = [
        (Shape::Rectangle { a: 1.0, b: 1.0 }, [8, 12, 16, 24]),
        (Shape::Rectangle { a: 1.0, b: 0.5 }, [8, 16, 24, 32]),
        (Shape::Lshape, [8, 12, 16, 24]),
    ];
    for (shape, resolutions) in &planar {
        for &r in resolutions {
            let (pair, _) = build_planar(shape, r).unwrap();
            if pair.dim() > 600 {
                continue;
            }
            let count = 6.min(pair.dim() / 4);
            worst = worst.max(compare(&pair.buckling_operator(), &pair.b, count));
            let (stiffness, mass) = build_membrane(shape, r).unwrap();
            worst = worst.max(compare(&stiffness, &mass, count));
            operators += 2;
        }
    }
    let detail = format!("{operators} operators, worst rel eigenvalue gap {worst:.2e} (limit 1e-8)");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c9_probe() -> Outcome {
    let square = Shape::Rectangle { a: 1.0, b: 1.0 };
    let started = Instant::now();
    let coarse = Probe::solve(&square, 64, 4, &opts()).unwrap().report().unwrap();
    let fine = Probe::solve(&square, 128, 4, &opts()).unwrap().report().unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let ratios = refinement(&coarse, &fine);
    let min = |f: &dyn Fn(&buckling::probe::RefinementEntry) -> f64| {
        ratios.entries.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let l21 = min(&|e| e.l21_ratio);
    let l22 = min(&|e| e.l22_ratio);
    let identity = min(&|e| e.identity_defect_ratio);
    let c = ratios.c_defect_ratio;
    let l23 = fine.per_i.iter().map(|p| p.l23).fold(f64::INFINITY, f64::min);
    let stat = fine
        .per_i
        .iter()
        .map(|p| p.conjecture_statistic)
        .fold(f64::INFINITY, f64::min);
    let items = [
        ("L21 shrink", l21, l21 >= 1.5),
        ("L22 shrink", l22, l22 >= 1.5),
        ("identity shrink", identity, identity >= 1.5),
        ("c-antisymmetry shrink", c, c >= 1.5),
        ("min L23", l23, l23 >= -0.05),
        ("min statistic", stat, stat >= PROVED_FLOOR - 0.05),
        ("runtime s", elapsed, elapsed < 300.0),
    ];
    let detail = items
        .iter()
        .map(|(name, v, ok)| format!("{name} {v:.3}{}", if *ok { "" } else { " [fails]" }))
        .collect::<Vec<_>>()
        .join(", ");
    if items.iter().all(|(_, _, ok)| *ok) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c10_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let runs: &[&[&str]] = &[
        &[
            "solve",
            "--domain",
            "disk",
            "--resolution",
            "200",
            "--modes",
            "6",
            "--count",
            "10",
            "--out",
            "disk.json",
            "--plot",
            "plot_solve",
        ],
        &[
            "solve",
            "--domain",
            "lshape",
            "--resolution",
            "32",
            "--count",
            "6",
            "--out",
            "lshape.csv",
            "--format",
            "csv",
        ],
        &[
            "solve",
            "--domain",
            "cap",
            "--aperture",
            "1.0",
            "--resolution",
            "200",
            "--count",
            "8",
            "--out",
            "cap.json",
        ],
        &[
            "audit",
            "--spectrum",
            "disk.json",
            "--out",
            "audit.json",
            "--plot",
            "plot_audit",
        ],
        &[
            "audit",
            "--spectrum",
            "cap.json",
            "--out",
            "audit.csv",
            "--format",
            "csv",
        ],
        &[
            "bound",
            "--spectrum",
            "disk.json",
            "--envelope",
            "10",
            "--out",
            "bound.json",
            "--plot",
            "plot_bound",
        ],
        &[
            "probe",
            "--domain",
            "lshape",
            "--resolution",
            "24",
            "--count",
            "3",
            "--refine",
            "--out",
            "probe.json",
            "--plot",
            "plot_probe",
        ],
        &[
            "oracle",
            "--spectrum",
            "disk-buckling",
            "--count",
            "30",
            "--out",
            "oracle.json",
        ],
        &[
            "oracle",
            "--zeros",
            "2",
            "--count",
            "5",
            "--out",
            "zeros.csv",
            "--format",
            "csv",
        ],
    ];
    for dir in &dirs {
        for args in runs {
            let o = buckle(args, dir.path());
            if !o.status.success() {
                return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
    }
    let mut files = Vec::new();
    let mut stack = vec![dirs[0].path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push(path.strip_prefix(dirs[0].path()).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    let differing: Vec<_> = files
        .iter()
        .filter(|f| std::fs::read(dirs[0].path().join(f)).ok() != std::fs::read(dirs[1].path().join(f)).ok())
        .collect();
    if differing.is_empty() {
        Ok(format!(
            "{} commands, {} report files bit-identical",
            runs.len(),
            files.len()
        ))
    } else {
        Err(format!("differing files: {differing:?}"))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("disk buckling solver matches Bessel oracle", c1_disk_solver),
        ("membrane validation", c2_membrane),
        ("Euclidean inequality audit", c3_euclidean_audit),
        ("spherical cap audit", c4_caps),
        ("closed-form k=1 bounds", c5_closed_forms),
        ("bound dominance and homogeneity", c6_dominance_homogeneity),
        ("PAV equals grid search", c7_pav_vs_grid),
        ("iterative equals dense solver", c8_dense_equivalence),
        ("proof probe convergence", c9_probe),
        ("CLI determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (n, (title, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag} {title}: {detail} [{secs:.1} s]", n + 1);
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
