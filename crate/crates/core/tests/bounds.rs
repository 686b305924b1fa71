use buckling::bounds::{
    audit_all, envelope, low_order_bounds, monotone_objective, next_upper_bound, next_upper_bound_euclid,
    next_upper_bound_mono, optimize_delta_fixed, optimize_delta_monotone, residual, AuditOptions, BoundError,
    BoundForm, BoundMethod, DeltaSequence,
};
use buckling::spectrum::{Geometry, ProblemKind, Spectrum, SpectrumTags};
use proptest::prelude::*;

fn euclid(values: &[f64]) -> Spectrum {
    Spectrum::new(values.to_vec(), SpectrumTags::euclidean_buckling(2)).unwrap()
}

fn sphere(values: &[f64], n: u32) -> Spectrum {
    Spectrum::new(
        values.to_vec(),
        SpectrumTags::new(ProblemKind::Buckling, Geometry::Sphere, n),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Largest zero of a function that is negative to its left and positive at
/// `hi`, by plain bisection. Independent of the engine's closed roots.
fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn residual_vanishes_at_the_factorized_root() {
    let s = euclid(&[1.0]);
    let e = residual(&s.prefix(1).unwrap(), 13.0 / 3.0, BoundForm::EuclidThis, None).unwrap();
    assert!((e.lhs - 100.0 / 9.0).abs() < 1e-13);
    assert!(e.residual.abs() < 1e-12);
    assert!(e.satisfied);

    let s = sphere(&[2.0], 2);
    let e = residual(&s.prefix(1).unwrap(), 6.0, BoundForm::SphereN2, None).unwrap();
    assert_eq!((e.lhs, e.rhs, e.residual), (16.0, 16.0, 0.0));
}

#[test]
fn zero_gap_gives_zero_residual_for_every_form() {
    let e = euclid(&[1.7]);
    let p = e.prefix(1).unwrap();
    let d = DeltaSequence::constant(0.3, 1).unwrap();
    for form in [BoundForm::EuclidCy, BoundForm::EuclidThis, BoundForm::EuclidConj] {
        let r = residual(&p, 1.7, form, None).unwrap();
        assert_eq!((r.lhs, r.rhs, r.residual), (0.0, 0.0, 0.0));
    }
    let r = residual(&p, 1.7, BoundForm::EuclidMono, Some(&d)).unwrap();
    assert_eq!(r.residual, 0.0);
    let s = sphere(&[1.7], 2);
    let p = s.prefix(1).unwrap();
    for form in [BoundForm::SphereWx, BoundForm::SphereMono] {
        assert_eq!(residual(&p, 1.7, form, Some(&d)).unwrap().residual, 0.0);
    }
    assert_eq!(residual(&p, 1.7, BoundForm::SphereN2, None).unwrap().residual, 0.0);
}

#[test]
fn disk_prefix_satisfies_conjecture_at_duplicate_candidate() {
    let s = euclid(&[14.682, 26.3746]);
    let e = residual(&s.prefix(2).unwrap(), 26.3746, BoundForm::EuclidConj, None).unwrap();
    // lhs = (Λ2 − Λ1)², rhs = (4/n) Σ (Λ − Λi) Λi with the i = 2 term zero
    let g = 26.3746 - 14.682;
    assert!((e.lhs - g * g).abs() < 1e-12);
    assert!((e.rhs - 2.0 * g * 14.682).abs() < 1e-12);
    assert!(e.residual > 0.0);
}

#[test]
fn k1_euclid_bounds_are_one_plus_c() {
    let s = euclid(&[1.0]);
    let p = s.prefix(1).unwrap();
    for (form, expected) in [
        (BoundForm::EuclidThis, 13.0 / 3.0),
        (BoundForm::EuclidCy, 5.0),
        (BoundForm::EuclidConj, 3.0),
    ] {
        let b = next_upper_bound_euclid(&p, form).unwrap();
        assert_eq!(b.method, BoundMethod::ClosedRoot);
        assert!(rel(b.upper_bound, expected) < 1e-14, "{form}: {}", b.upper_bound);
        assert!(b.certificate.residual.abs() < 1e-12);
    }
    let ppw = low_order_bounds(1.0, 2).ppw2.unwrap();
    let conj = next_upper_bound_euclid(&p, BoundForm::EuclidConj).unwrap().upper_bound;
    assert!(rel(conj, ppw) < 1e-14);
}

#[test]
fn disk_two_value_prefix_matches_bisection_oracle() {
    let values = [14.682, 26.3746];
    let s = euclid(&values);
    let b = next_upper_bound_euclid(&s.prefix(2).unwrap(), BoundForm::EuclidThis).unwrap();
    let c = 4.0 * (2.0 + 4.0 / 3.0) / 4.0;
    let f = |lam: f64| {
        values.iter().map(|&l| (lam - l) * (lam - l)).sum::<f64>()
            - c * values.iter().map(|&l| (lam - l) * l).sum::<f64>()
    };
    let oracle = bisect_root(f, 26.3746, 1000.0);
    assert!(rel(b.upper_bound, oracle) < 1e-12, "{} vs {oracle}", b.upper_bound);
    assert!((b.upper_bound - 86.7).abs() < 0.1);
}

#[test]
fn sphere_k1_bounds() {
    let s = sphere(&[2.0], 2);
    let p = s.prefix(1).unwrap();
    let n2 = next_upper_bound_mono(&p, BoundForm::SphereN2).unwrap();
    assert!(rel(n2.upper_bound, 6.0) < 1e-15);
    let mono = next_upper_bound_mono(&p, BoundForm::SphereMono).unwrap();
    assert_eq!(mono.method, BoundMethod::Bisection);
    assert!(rel(mono.upper_bound, 6.0) < 2e-9, "{}", mono.upper_bound);
    // constant-δ n = 2 reduction: 2g² ≤ 2 g^{3/2} √(2 · 2.25) ⇒ Λ ≤ 2 + 4.5
    let wx = next_upper_bound_mono(&p, BoundForm::SphereWx).unwrap();
    assert!(rel(wx.upper_bound, 6.5) < 2e-9, "{}", wx.upper_bound);
}

#[test]
fn euclid_mono_never_exceeds_constant_delta_bound() {
    let s = euclid(&[1.0]);
    let b = next_upper_bound_mono(&s.prefix(1).unwrap(), BoundForm::EuclidMono).unwrap();
    assert!(b.upper_bound <= 13.0 / 3.0 * (1.0 + 2e-9));
    let s = euclid(&[1.0, 1.9, 2.5, 3.9]);
    for k in 1..=4 {
        let p = s.prefix(k).unwrap();
        let mono = next_upper_bound_mono(&p, BoundForm::EuclidMono).unwrap().upper_bound;
        let this = next_upper_bound_euclid(&p, BoundForm::EuclidThis).unwrap().upper_bound;
        assert!(mono <= this * (1.0 + 2e-9), "k={k}: {mono} > {this}");
    }
}

#[test]
fn fixed_delta_n2_reduction() {
    let s = sphere(&[2.0], 2);
    let p = s.prefix(1).unwrap();
    let (delta, rhs) = optimize_delta_fixed(&p, 6.0, BoundForm::SphereWx).unwrap();
    assert!(rel(delta, (8.0f64 / 36.0).sqrt()) < 1e-6);
    assert!(rel(rhs, 2.0 * 288f64.sqrt()) < 1e-12);
    assert_eq!(optimize_delta_fixed(&p, 2.0, BoundForm::SphereWx).unwrap().1, 0.0);
    assert!(optimize_delta_fixed(&p, 6.0, BoundForm::SphereMono).is_err());
}

#[test]
fn pav_matches_grid_search_on_spec_pair() {
    let (a, b) = ([1.0, 1.0], [1.0, 4.0]);
    let d = optimize_delta_monotone(&a, &b).unwrap();
    let mut best = f64::INFINITY;
    for i in 1..4000 {
        let d1 = i as f64 * 1e-3;
        for j in 1..=i {
            let d2 = j as f64 * 1e-3;
            best = best.min(monotone_objective(&a, &b, &[d1, d2]));
        }
    }
    let ours = monotone_objective(&a, &b, d.values());
    assert!(ours <= best);
    assert!(rel(ours, best) < 1e-6);
}

#[test]
fn envelope_examples() {
    assert_eq!(envelope(1.0, 2, BoundForm::EuclidConj, 2).unwrap(), vec![1.0, 3.0]);
    let cy = envelope(1.0, 2, BoundForm::EuclidCy, 3).unwrap();
    assert!(rel(cy[1], 5.0) < 1e-14);
    assert!(cy.windows(2).all(|w| w[0] <= w[1]));
    let scaled = envelope(7.5, 2, BoundForm::EuclidCy, 3).unwrap();
    for (x, y) in cy.iter().zip(&scaled) {
        assert!(rel(*y, 7.5 * x) < 1e-12);
    }
    assert!(envelope(1.0, 2, BoundForm::LowHileYeh, 3).is_err());
}

#[test]
fn low_order_values() {
    let b = low_order_bounds(1.0, 2);
    assert_eq!(b.ppw2, Some(3.0));
    assert_eq!(b.hile_yeh, 2.5);
    assert_eq!(b.ashbaugh_sum, 6.0);
    let disk = low_order_bounds(14.682, 2);
    assert!((disk.hile_yeh - 36.705).abs() < 1e-12);
    assert!(26.3746 <= disk.hile_yeh);
    let b3 = low_order_bounds(1.0, 3);
    assert_eq!(b3.ppw2, None);
    assert!((b3.hile_yeh - 2.12).abs() < 1e-15);
}

#[test]
fn membrane_square_audit() {
    let pi2 = std::f64::consts::PI.powi(2);
    let s = Spectrum::new(
        vec![2.0 * pi2, 5.0 * pi2, 5.0 * pi2, 8.0 * pi2],
        SpectrumTags::new(ProblemKind::Membrane, Geometry::Euclidean, 2),
    )
    .unwrap();
    let entries = audit_all(&s, &[BoundForm::MembranePpw], AuditOptions::default()).unwrap();
    assert_eq!(entries.len(), 3);
    assert!(entries.iter().all(|e| e.satisfied));
    assert!((entries[0].lhs - 29.609).abs() < 1e-3);
    assert!((entries[0].rhs - 39.478).abs() < 1e-3);
}

#[test]
fn audit_orders_by_k_then_form_and_records_delta() {
    let s = euclid(&[1.0, 2.0, 2.5]);
    let entries = audit_all(&s, &BoundForm::ALL, AuditOptions::default()).unwrap();
    let keys: Vec<(usize, BoundForm)> = entries.iter().map(|e| (e.k, e.form)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(entries
        .iter()
        .all(|e| e.form.compatible(ProblemKind::Buckling, Geometry::Euclidean, 2)));
    let mono: Vec<_> = entries.iter().filter(|e| e.form == BoundForm::EuclidMono).collect();
    assert_eq!(mono.len(), 2);
    assert!(mono.iter().all(|e| e
        .delta
        .as_ref()
        .is_some_and(|d| d.len() == e.k && d.is_non_increasing())));
    // Ashbaugh lives at k = n = 2, PPW2 and Hile–Yeh at k = 1
    assert!(entries.iter().any(|e| e.form == BoundForm::LowAshbaugh && e.k == 2));
    assert!(!entries.iter().any(|e| e.form == BoundForm::LowHileYeh && e.k != 1));
}

#[test]
fn corrupted_spectrum_is_flagged() {
    let s = euclid(&[1.0, 100.0]);
    let entries = audit_all(&s, &[BoundForm::EuclidConj], AuditOptions::default()).unwrap();
    assert_eq!(entries[0].lhs, 9801.0);
    assert_eq!(entries[0].rhs, 198.0);
    assert!(!entries[0].satisfied);
}

#[test]
fn error_paths() {
    let e = euclid(&[1.0, 2.0]);
    let p = e.prefix(2).unwrap();
    assert!(matches!(
        residual(&p, 3.0, BoundForm::SphereN2, None),
        Err(BoundError::FormMismatch { .. })
    ));
    assert!(matches!(
        residual(&p, 3.0, BoundForm::EuclidMono, None),
        Err(BoundError::MissingDelta(_))
    ));
    let rising = DeltaSequence::new(vec![1.0, 2.0]).unwrap();
    assert!(matches!(
        residual(&p, 3.0, BoundForm::EuclidMono, Some(&rising)),
        Err(BoundError::NonMonotoneDelta)
    ));
    assert!(matches!(
        residual(&p, 1.5, BoundForm::EuclidThis, None),
        Err(BoundError::CandidateBelowPrefix { .. })
    ));
    assert!(matches!(
        residual(&p, 3.0, BoundForm::LowPpw2, None),
        Err(BoundError::IndexNotApplicable { .. })
    ));
    assert!(DeltaSequence::new(vec![1.0, 0.0]).is_err());

    let flagged = sphere(&[0.5, 3.0], 3);
    assert!(matches!(
        next_upper_bound(&flagged.prefix(1).unwrap(), BoundForm::SphereMono),
        Err(BoundError::SphereBelowThreshold)
    ));
    // SPHERE_WX does not divide by Λ_i − (n − 2) and stays available
    assert!(next_upper_bound(&flagged.prefix(1).unwrap(), BoundForm::SphereWx).is_ok());

    // n = 3, Λ_1 = 1.5: a_1 ∝ 1.5 − 1/0.5 < 0
    let negative = sphere(&[1.5], 3);
    assert!(matches!(
        next_upper_bound(&negative.prefix(1).unwrap(), BoundForm::SphereMono),
        Err(BoundError::UnboundedObjective { index: 0 })
    ));
}

#[test]
fn negative_discriminant_is_reported() {
    // Λ_2 far above the Cheng–Yang root leaves F > 0 everywhere at k = 2
    let s = euclid(&[1.0, 100.0]);
    assert!(matches!(
        next_upper_bound_euclid(&s.prefix(2).unwrap(), BoundForm::EuclidConj),
        Err(BoundError::NegativeDiscriminant { .. })
    ));
}

#[test]
fn residual_is_pure() {
    let s = euclid(&[3.1, 4.7, 9.2]);
    let p = s.prefix(3).unwrap();
    let a = residual(&p, 17.3, BoundForm::EuclidThis, None).unwrap();
    let b = residual(&p, 17.3, BoundForm::EuclidThis, None).unwrap();
    assert_eq!(a.residual.to_bits(), b.residual.to_bits());
}

/// Prefixes built by drawing each next value between `Λ_k` and the
/// conjecture bound, so every form holds at every `k`.
fn valid_prefix() -> impl Strategy<Value = Vec<f64>> {
    (0.1f64..100.0, prop::collection::vec(0.0f64..1.0, 0..10)).prop_map(|(l1, fractions)| {
        let mut values = vec![l1];
        for t in fractions {
            let s = euclid(&values);
            let bound = next_upper_bound_euclid(&s.prefix(values.len()).unwrap(), BoundForm::EuclidConj)
                .unwrap()
                .upper_bound;
            let last = *values.last().unwrap();
            values.push(last + t * (bound - last));
        }
        values
    })
}

proptest! {
    #[test]
    fn euclid_bounds_are_ordered(values in valid_prefix()) {
        let s = euclid(&values);
        let p = s.prefix(values.len()).unwrap();
        let conj = next_upper_bound_euclid(&p, BoundForm::EuclidConj).unwrap().upper_bound;
        let this = next_upper_bound_euclid(&p, BoundForm::EuclidThis).unwrap().upper_bound;
        let cy = next_upper_bound_euclid(&p, BoundForm::EuclidCy).unwrap().upper_bound;
        prop_assert!(conj <= this && this <= cy);
        prop_assert!(conj >= p.last());
    }

    #[test]
    fn euclid_residual_is_homogeneous(values in valid_prefix(), t in 0.01f64..100.0, extra in 0.0f64..5.0) {
        let s = euclid(&values);
        let st = s.scaled(t).unwrap();
        let k = values.len();
        let lam = s.values()[k - 1] * (1.0 + extra);
        for form in BoundForm::EUCLID {
            let r = residual(&s.prefix(k).unwrap(), lam, form, None).unwrap();
            let rt = residual(&st.prefix(k).unwrap(), t * lam, form, None).unwrap();
            let scale = r.lhs.abs().max(r.rhs.abs()) * t * t;
            prop_assert!((rt.residual - t * t * r.residual).abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn pav_beats_every_constant_delta(
        coeffs in prop::collection::vec((0.01f64..10.0, 0.0f64..10.0), 1..8),
        constants in prop::collection::vec(0.01f64..20.0, 1..10),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = coeffs.into_iter().unzip();
        let d = optimize_delta_monotone(&a, &b).unwrap();
        prop_assert!(d.is_non_increasing());
        let best = monotone_objective(&a, &b, d.values());
        for c in constants {
            let constant = vec![c; a.len()];
            prop_assert!(best <= monotone_objective(&a, &b, &constant) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bisection_certificate(l1 in 0.5f64..50.0, rest in prop::collection::vec(0.0f64..1.0, 0..4)) {
        let mut values = vec![l1];
        for t in rest {
            let last = *values.last().unwrap();
            values.push(last * (1.0 + 0.3 * t));
        }
        let s = sphere(&values, 2);
        for form in [BoundForm::SphereMono, BoundForm::SphereWx] {
            let p = s.prefix(values.len()).unwrap();
            let b = next_upper_bound_mono(&p, form).unwrap();
            let at = residual_at_best(&s, values.len(), b.upper_bound, form);
            let (r, scale) = at;
            prop_assert!(r.abs() <= 1e-6 * scale);
            let (beyond, _) = residual_at_best(&s, values.len(), b.upper_bound * (1.0 + 1e-6), form);
            prop_assert!(beyond < 0.0);
        }
    }

    #[test]
    fn sphere_mono_sharpens_wang_xia(values in prop::collection::vec(0.5f64..40.0, 1..6), n in 2u32..6, delta in 0.01f64..5.0, extra in 0.0f64..3.0) {
        let shift = f64::from(n) - 2.0;
        let values: Vec<f64> = values.into_iter().map(|v| v + shift).collect();
        let s = sphere(&values, n);
        let k = values.len();
        let lam = s.values()[k - 1] * (1.0 + extra);
        let d = DeltaSequence::constant(delta, k).unwrap();
        let p = s.prefix(k).unwrap();
        let mono = residual(&p, lam, BoundForm::SphereMono, Some(&d)).unwrap();
        let wx = residual(&p, lam, BoundForm::SphereWx, Some(&d)).unwrap();
        let tol = 1e-12 * mono.rhs.abs().max(wx.rhs.abs()).max(1.0);
        prop_assert!(mono.rhs <= wx.rhs + tol);
        prop_assert!(mono.lhs >= wx.lhs - tol);
    }
}

/// `rhs − lhs` at the optimal δ, computed through the public audit path.
fn residual_at_best(s: &Spectrum, k: usize, lam: f64, form: BoundForm) -> (f64, f64) {
    let mut values = s.values()[..k].to_vec();
    values.push(lam);
    let extended = Spectrum::new(values, s.tags().clone()).unwrap();
    let entries = audit_all(&extended, &[form], AuditOptions::default()).unwrap();
    let e = entries.iter().find(|e| e.k == k).unwrap();
    (e.residual, e.lhs.abs().max(e.rhs.abs()))
}
