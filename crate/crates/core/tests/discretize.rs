use approx::assert_relative_eq;
use buckling::discretize::*;
use buckling::eigensolve::{dense_oracle, smallest_pairs, SolverOptions};
use buckling::oracle::{bessel_zero, disk_buckling_spectrum};
use buckling::solve::solve_domain;
use buckling::ProblemKind;
use std::f64::consts::PI;

const SQUARE: Shape = Shape::Rectangle { a: 1.0, b: 1.0 };

fn fd_square_spectrum(cells: usize) -> Vec<f64> {
    let h = 1.0 / cells as f64;
    let mut v = Vec::new();
    for p in 1..cells {
        for q in 1..cells {
            let s = |k: usize| (k as f64 * PI * h / 2.0).sin().powi(2);
            v.push(4.0 / (h * h) * (s(p) + s(q)));
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn quarter_step_square_membrane() {
    let (b, m) = build_membrane(&SQUARE, 4).unwrap();
    assert_eq!(b.rows(), 9);
    let r = dense_oracle(&b, &m, 1).unwrap();
    let h = 0.25f64;
    let exact = 2.0 * (4.0 / (h * h)) * (PI * h / 2.0).sin().powi(2);
    assert_relative_eq!(r.values[0], exact, max_relative = 1e-12);
    assert_relative_eq!(r.values[0], 18.745, max_relative = 1e-4);
}

#[test]
fn square_membrane_matches_fd_closed_form() {
    let (b, m) = build_membrane(&SQUARE, 12).unwrap();
    let r = dense_oracle(&b, &m, 121).unwrap();
    for (got, want) in r.values.iter().zip(fd_square_spectrum(12)) {
        assert_relative_eq!(*got, want, max_relative = 1e-11);
    }
}

#[test]
fn square_membrane_continuum_limit() {
    let (b, m) = build_membrane(&SQUARE, 128).unwrap();
    let r = smallest_pairs(&b, &m, 2, &SolverOptions::default()).unwrap();
    assert_relative_eq!(r.values[0], 2.0 * PI * PI, max_relative = 5e-3);
}

#[test]
fn assembled_matrices_are_exactly_symmetric() {
    for shape in [SQUARE, Shape::Lshape, Shape::Rectangle { a: 1.5, b: 0.75 }] {
        let (pair, grad) = build_planar(&shape, 16).unwrap();
        assert_eq!(pair.a.asymmetry(), 0.0);
        assert_eq!(pair.b.asymmetry(), 0.0);
        // B is exactly the weighted edge Gram matrix
        assert_eq!(grad.g.gram(&grad.weights), pair.b);
    }
}

#[test]
fn buckling_exceeds_membrane_ritz_values() {
    // Λ₁ ≥ λ₁ holds for the continuum and for these discretisations
    let (pair, _) = build_planar(&Shape::Lshape, 16).unwrap();
    let buck = dense_oracle(&pair.buckling_operator(), &pair.b, 4).unwrap();
    let memb = dense_oracle(&pair.b, &pair.mass_matrix(), 4).unwrap();
    assert!(buck.values[0] > memb.values[0]);
    assert!(buck.values.iter().all(|&v| v > 0.0));
}

#[test]
fn radial_membrane_matches_bessel_zeros() {
    for m in 0..4u32 {
        let pair = build_radial_disk(m, 400).unwrap();
        let r = smallest_pairs(&pair.b, &pair.mass_matrix(), 3, &SolverOptions::default()).unwrap();
        for (s, v) in r.values.iter().enumerate() {
            let j = bessel_zero(m, s as u32 + 1).unwrap();
            assert_relative_eq!(*v, j * j, max_relative = 1e-3);
        }
    }
    let pair = build_radial_disk(0, 400).unwrap();
    let r = smallest_pairs(&pair.b, &pair.mass_matrix(), 1, &SolverOptions::default()).unwrap();
    assert_relative_eq!(r.values[0], 5.7832, max_relative = 5e-3);
}

#[test]
fn radial_buckling_matches_shifted_bessel_zeros() {
    for m in 0..4u32 {
        let pair = build_radial_disk(m, 400).unwrap();
        let r = smallest_pairs(&pair.buckling_operator(), &pair.b, 3, &SolverOptions::default()).unwrap();
        for (s, v) in r.values.iter().enumerate() {
            let j = bessel_zero(m + 1, s as u32 + 1).unwrap();
            assert_relative_eq!(*v, j * j, max_relative = 2e-4);
        }
    }
}

#[test]
fn disk_buckling_converges_at_second_order() {
    let exact = bessel_zero(1, 1).unwrap().powi(2);
    let err = |n: usize| {
        let pair = build_radial_disk(0, n).unwrap();
        let r = smallest_pairs(&pair.buckling_operator(), &pair.b, 1, &SolverOptions::default()).unwrap();
        (r.values[0] - exact).abs()
    };
    let (e1, e2, e3) = (err(100), err(200), err(400));
    for ratio in [e1 / e2, e2 / e3] {
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn merged_modes_reproduce_disk_spectrum() {
    let spec = DomainSpec {
        shape: Shape::Disk,
        resolution: 400,
        mode_count: 8,
    };
    let out = solve_domain(&spec, ProblemKind::Buckling, 20, &SolverOptions::default()).unwrap();
    assert!(out.complete);
    let oracle = disk_buckling_spectrum(20).unwrap();
    for (got, want) in out.spectrum.values().iter().zip(oracle.values()) {
        assert_relative_eq!(*got, *want, max_relative = 5e-4);
    }
}

#[test]
fn too_few_modes_are_flagged() {
    let spec = DomainSpec {
        shape: Shape::Disk,
        resolution: 64,
        mode_count: 1,
    };
    let out = solve_domain(&spec, ProblemKind::Buckling, 4, &SolverOptions::default()).unwrap();
    assert!(!out.complete);
}

#[test]
fn small_cap_approaches_rescaled_disk() {
    let theta = 0.1;
    for m in 0..3u32 {
        let cap = build_radial_cap(theta, m, 400).unwrap();
        let disk = build_radial_disk(m, 400).unwrap();
        let rc = smallest_pairs(&cap.buckling_operator(), &cap.b, 2, &SolverOptions::default()).unwrap();
        let rd = smallest_pairs(&disk.buckling_operator(), &disk.b, 2, &SolverOptions::default()).unwrap();
        for (c, d) in rc.values.iter().zip(&rd.values) {
            assert_relative_eq!(c * theta * theta, *d, max_relative = 0.02);
        }
    }
}

#[test]
fn hemisphere_axisymmetric_modes() {
    // m = 0 modes are P_ν(cos θ) + const with P_ν'(0) = 0, so Λ = ν(ν+1)
    // with ν even: 6, 20, 42
    let cap = build_radial_cap(PI / 2.0, 0, 400).unwrap();
    let r = smallest_pairs(&cap.buckling_operator(), &cap.b, 3, &SolverOptions::default()).unwrap();
    for (got, want) in r.values.iter().zip([6.0, 20.0, 42.0]) {
        assert_relative_eq!(*got, want, max_relative = 1e-4);
    }
    let coarse = build_radial_cap(PI / 2.0, 0, 200).unwrap();
    let rc = smallest_pairs(&coarse.buckling_operator(), &coarse.b, 1, &SolverOptions::default()).unwrap();
    assert!(rc.values[0] > 0.0 && (rc.values[0] - r.values[0]).abs() < 1e-3 * r.values[0]);
}

#[test]
fn matrix_dump_round_trip() {
    let dir = std::env::temp_dir().join(format!("buckling-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (pair, _) = build_planar(&SQUARE, 8).unwrap();
    pair.write_dump(&dir, "square").unwrap();
    let text = std::fs::read_to_string(dir.join("square_A.mtx")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("% 49 49 {}", pair.a.nnz()));
    let (r, c, v) = {
        let f: Vec<&str> = lines.next().unwrap().split(' ').collect();
        (
            f[0].parse::<usize>().unwrap(),
            f[1].parse::<usize>().unwrap(),
            f[2].parse::<f64>().unwrap(),
        )
    };
    assert_eq!(v, pair.a.get(r, c));
    let grid: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("square_grid.json")).unwrap()).unwrap();
    assert_eq!(grid["unknowns"], 49);
    std::fs::remove_dir_all(&dir).unwrap();
}
