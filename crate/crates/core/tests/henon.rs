use homoclinic_core::henon::{
    bifurcation_values, birkhoff_b1, fixed_points, henon, horseshoe_certificate, two_orbit_phase, two_periodic_orbit,
    HenonEvent, HenonParam,
};
use homoclinic_core::PlanarPoint;

fn value_of(event: HenonEvent) -> f64 {
    bifurcation_values().unwrap().into_iter().find(|b| b.event == event).unwrap().m
}

#[test]
fn bifurcation_values_are_exact() {
    assert!(value_of(HenonEvent::FixedPointBirth).abs() < 1e-9);
    assert!((value_of(HenonEvent::PeriodDoubling) - 1.0).abs() < 1e-9);
    assert!((value_of(HenonEvent::Resonance1To4) - 0.5).abs() < 1e-9);
    assert!((value_of(HenonEvent::Resonance1To3) - 0.75).abs() < 1e-9);
    assert!((value_of(HenonEvent::Twistless) - 0.625).abs() < 1e-6);
}

#[test]
fn two_orbit_is_a_two_cycle_with_trace_from_closed_form() {
    // (-s, s) -> (s, M - s - s^2) = (s, -s) with s = sqrt M, and
    // [[0, 1], [1, 2s]] [[0, 1], [1, -2s]] = [[1, -2s], [2s, 1 - 4M]].
    for m in [0.1, 0.3, 0.55, 0.9] {
        let c = two_periodic_orbit(HenonParam(m)).unwrap();
        let q = henon(m, henon(m, c.p1));
        assert!(q.dist(c.p1) < 1e-13);
        assert!(henon(m, c.p1).dist(c.p2) < 1e-13);
        assert!((c.trace - (2.0 - 4.0 * m)).abs() < 1e-12, "{} {}", c.trace, 2.0 - 4.0 * m);
        let phi = two_orbit_phase(m).unwrap();
        assert!((phi.cos() - (1.0 - 2.0 * m)).abs() < 1e-12);
    }
}

#[test]
fn fixed_points_exist_only_for_positive_m() {
    assert!(fixed_points(HenonParam(-0.2)).is_empty());
    for p in fixed_points(HenonParam(0.7)) {
        assert!(henon(0.7, p.point).dist(p.point) < 1e-13);
    }
}

/// Mean rotation angle of `F = H o H` about the elliptic point, measured in
/// coordinates where the linearization is a rotation.
fn rotation_angle(m: f64, r: f64) -> f64 {
    let c = two_periodic_orbit(HenonParam(m)).unwrap();
    let p = c.p1;
    let f = |z: PlanarPoint| henon(m, henon(m, z));
    // linearization by central differences
    let h = 1e-7;
    let dx = |d: PlanarPoint| {
        let a = f(PlanarPoint::new(p.x + d.x * h, p.y + d.y * h));
        let b = f(PlanarPoint::new(p.x - d.x * h, p.y - d.y * h));
        ((a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h))
    };
    let (j00, _) = dx(PlanarPoint::new(1.0, 0.0));
    let (j01, j11) = dx(PlanarPoint::new(0.0, 1.0));
    let tr = j00 + j11;
    let theta = (tr / 2.0).acos();
    // complex eigenvector for exp(i theta): (j01, exp(i theta) - j00)
    let (vr, vi) = ((j01, theta.cos() - j00), (0.0, theta.sin()));
    let det = vr.0 * vi.1 - vi.0 * vr.1;
    let to_local = |z: PlanarPoint| {
        let (u, v) = (z.x - p.x, z.y - p.y);
        ((vi.1 * u - vi.0 * v) / det, (-vr.1 * u + vr.0 * v) / det)
    };
    let mut z = PlanarPoint::new(p.x + r * vr.0, p.y + r * vr.1);
    let mut prev = to_local(z);
    let mut total = 0.0;
    let n = 4000;
    for _ in 0..n {
        z = f(z);
        let cur = to_local(z);
        let mut d = cur.1.atan2(cur.0) - prev.1.atan2(prev.0);
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d <= -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
        prev = cur;
    }
    (total / n as f64).abs()
}

#[test]
fn twist_sign_matches_rotation_number_slope() {
    let mut signs = Vec::new();
    for m in [0.56, 0.69] {
        let slope = (rotation_angle(m, 0.02) - rotation_angle(m, 0.01)) / (0.02f64.powi(2) - 0.01f64.powi(2));
        let b1 = birkhoff_b1(HenonParam(m)).unwrap();
        assert!(b1 != 0.0 && slope.abs() > 1e-3, "M={m} slope {slope} b1 {b1}");
        signs.push((slope.signum(), b1.signum()));
    }
    // twist changes sign across M = 5/8, and B1 tracks it
    assert_eq!(signs[0].0, -signs[1].0);
    assert_eq!(signs[0].1, -signs[1].1);
    assert_eq!(signs[0].0 * signs[0].1, signs[1].0 * signs[1].1);
}

#[test]
fn twist_vanishes_at_five_eighths() {
    assert!(birkhoff_b1(HenonParam(0.625)).unwrap().abs() < 1e-9);
    assert!(birkhoff_b1(HenonParam(0.5)).is_err());
    assert!(birkhoff_b1(HenonParam(0.75)).is_err());
}

#[test]
fn horseshoe_certificate_threshold() {
    for m in [9.5, 10.0, 12.0, 20.0] {
        assert!(horseshoe_certificate(HenonParam(m)), "M={m}");
    }
    for m in [-1.0, 0.5, 2.0, 5.0] {
        assert!(!horseshoe_certificate(HenonParam(m)), "M={m}");
    }
}
