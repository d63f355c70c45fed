use homoclinic_core::atlas::{
    certify_global_resonance, run_cascade, run_strip_atlas, Degeneracy, Verdict,
};
use homoclinic_core::family::{build_family, tune_to, FamilyHandle, GlobalRecipe, LocalMapParams};
use homoclinic_core::henon::HenonEvent;
use homoclinic_core::orbit::{
    find_fixed_point, locate_bifurcation, phase_of_elliptic, two_orbit_at_m, BifurcationKind, OrbitKind,
};
use homoclinic_core::return_map::ReturnMap;
use homoclinic_core::Error;

fn base(lambda: f64) -> FamilyHandle {
    let r = GlobalRecipe::generalized_henon(1.0, 0.3, 0.0, 1.0, 0.0);
    build_family(LocalMapParams::new(lambda, vec![1.0]).unwrap(), &r, 0.0).unwrap()
}

#[test]
fn bifurcations_sit_where_the_limit_map_puts_them() {
    for lambda in [0.5, -0.5] {
        let f = tune_to(&base(lambda), -0.1, base(lambda).s0).unwrap();
        for k in [8u32, 10, 12] {
            let l2k = lambda.abs().powi(2 * k as i32);
            for kind in [BifurcationKind::Plus, BifurcationKind::Minus] {
                let b = locate_bifurcation(&f, k, kind).unwrap();
                assert!(b.trace_residual.abs() < 1e-8, "{b:?}");
                assert!((b.m - kind.limit_m()).abs() < 0.1, "k={k} {kind:?} M={}", b.m);
                assert!((b.mu - b.predicted_mu).abs() / l2k < 0.1);
                // one application of T_k reverses orientation, two preserve it
                let det = if kind == BifurcationKind::Plus { -1.0 } else { 1.0 };
                assert!((b.orbit.det - det).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn orbits_are_periodic_in_the_original_map() {
    let f = tune_to(&base(0.5), -0.1, base(0.5).s0).unwrap();
    let k = 10;
    let o = two_orbit_at_m(&f, k, 0.4, None).unwrap();
    assert_eq!(o.kind, OrbitKind::DoubleRound);
    assert_eq!(o.period, 2 * (k + 1));
    assert!(o.is_elliptic());
    let rm = ReturnMap::at_mu(&f, k, o.mu).unwrap();
    let p = o.points[0];
    let back = rm.eval(rm.eval(p).unwrap()).unwrap();
    assert!(back.dist(p) < 1e-9, "{back:?} {p:?}");
    let phi = phase_of_elliptic(&o).unwrap();
    assert!((phi.cos() - o.trace / 2.0).abs() < 1e-12);
    // the same orbit's first point is not a fixed point
    let fp = find_fixed_point(&rm, o.points[0]);
    if let Ok(fp) = fp {
        assert!(fp.points[0].dist(p) > 1e-6);
    }
}

#[test]
fn two_orbit_collapses_outside_its_window() {
    let f = tune_to(&base(0.5), -0.1, base(0.5).s0).unwrap();
    let r = two_orbit_at_m(&f, 10, -0.3, None);
    assert!(r.is_err() || !r.unwrap().is_elliptic());
}

#[test]
fn cascade_intervals_shrink_by_lambda_squared() {
    for lambda in [0.5, -0.5] {
        let f = tune_to(&base(lambda), -0.1, base(lambda).s0).unwrap();
        let res = run_cascade(&f, 8..=14).unwrap();
        assert!(res.failures.is_empty(), "{:?}", res.failures);
        assert!(res.pairwise_disjoint);
        assert!(!res.all_contain_zero);
        for &(k, r) in &res.width_ratios {
            if k >= 12 {
                assert!((r - 0.25).abs() <= 0.05 * 0.25, "k={k} ratio {r}");
            }
        }
        assert!(res.constant_trend <= 0.0, "trend {}", res.constant_trend);
        for row in &res.rows {
            assert!(row.phase_monotone);
            let events: Vec<_> = row.flags.iter().map(|f| f.event).collect();
            for e in [HenonEvent::Resonance1To4, HenonEvent::Resonance1To3, HenonEvent::Twistless] {
                assert!(events.contains(&e), "k={} {events:?}", row.k);
            }
        }
    }
}

#[test]
fn resonance_certificate_and_degeneracies() {
    let b = base(0.5);
    let f = tune_to(&b, 0.0, -0.4).unwrap();
    let cert = certify_global_resonance(&f, 8..=14).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
    assert!(cert.nested);
    assert!((cert.predicted_cos_phi - 0.2).abs() < 1e-7);
    for r in &cert.rows {
        let e = r.cos_phi_error.unwrap();
        assert!(e <= cert.constant * r.k as f64 * 0.5f64.powi(r.k as i32) * (1.0 + 1e-12));
    }
    for (s0, flag) in [(-0.5, Degeneracy::Resonance1To4), (-0.625, Degeneracy::Twistless), (-0.75, Degeneracy::Resonance1To3)] {
        let f = tune_to(&b, 0.0, s0).unwrap();
        let cert = certify_global_resonance(&f, 8..=12).unwrap();
        assert!(cert.flags.contains(&flag), "{s0}: {:?}", cert.flags);
        assert_ne!(cert.verdict, Verdict::Certified);
    }
}

#[test]
fn resonance_needs_alpha_zero() {
    let f = tune_to(&base(0.5), -0.1, -0.4).unwrap();
    assert!(matches!(certify_global_resonance(&f, 8..=10), Err(Error::NotAtResonance { .. })));
}

#[test]
fn small_strip_atlas() {
    let t = tune_to(&base(0.5), 0.0, -0.4).unwrap();
    let atlas = run_strip_atlas(&t, 8..=9, 0.05, 11).unwrap();
    assert!(atlas.failures.is_empty());
    assert!(atlas.resonant_band.contains(&5));
    for c in &atlas.curves {
        assert!(c.slope_rel_error < 0.05, "{c:?}");
    }
}
