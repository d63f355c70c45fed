use homoclinic_core::family::{build_family, FamilyHandle, GlobalRecipe, LocalMapParams};
use homoclinic_core::orbit::find_fixed_point_rescaled;
use homoclinic_core::rescale::{
    convergence_report, fit_second_component_cubic, m_from_mu, mu_from_m, RescaleChain, RescaledMap,
};
use homoclinic_core::{Error, PlanarPoint};
use proptest::prelude::*;

fn mixed(lambda: f64) -> FamilyHandle {
    let r = GlobalRecipe::generalized_henon(1.0, 0.3, 0.1, 1.0, 0.5).with_homoclinic_points(0.9, 1.0);
    build_family(LocalMapParams::new(lambda, vec![1.0]).unwrap(), &r, 0.0).unwrap()
}

proptest! {
    #[test]
    fn m_and_mu_round_trip(m in -1.0f64..2.0, k in 8u32..16, neg in any::<bool>()) {
        let f = mixed(if neg { -0.5 } else { 0.5 });
        let mu = mu_from_m(&f, k, m);
        let back = m_from_mu(&f, k, mu).unwrap().m;
        prop_assert!((back - m).abs() <= 1e-12 * (1.0 + m.abs()), "{back} vs {m}");
    }

    #[test]
    fn chain_round_trip(x in -3.0f64..3.0, y in -3.0f64..3.0, k in 8u32..16) {
        let f = mixed(0.5);
        let c = RescaleChain::new(&f, k, mu_from_m(&f, k, 0.4));
        let z = PlanarPoint::new(x, y);
        let back = c.from_cross(c.to_cross(z));
        prop_assert!(back.dist(z) < 1e-9 * (1.0 + z.norm_inf()));
    }
}

#[test]
fn parameter_map_has_the_right_slope() {
    for lambda in [0.5, -0.5] {
        let f = mixed(lambda);
        for k in [8u32, 11, 14] {
            let mu0 = mu_from_m(&f, k, 0.3);
            let h = 1e-6 * lambda.abs().powi(2 * k as i32);
            let dm = (m_from_mu(&f, k, mu0 + h).unwrap().m - m_from_mu(&f, k, mu0 - h).unwrap().m) / (2.0 * h);
            let want = -f.taylor.d / lambda.powi(2 * k as i32);
            assert!((dm - want).abs() < 1e-6 * want.abs(), "k={k}: {dm} vs {want}");
        }
    }
}

#[test]
fn precision_floor_is_reported() {
    let f = mixed(0.5);
    let k = 14;
    let lk = 0.5f64.powi(k);
    let offset = lk * (f.taylor.c * 0.9 - 1.0) * (1.0 + k as f64 * lk * 0.9);
    let e = m_from_mu(&f, k as u32, -offset).unwrap_err();
    assert!(matches!(e, Error::PrecisionFloor { .. }));
}

#[test]
fn rescaling_preserves_multipliers() {
    let f = mixed(0.5);
    for k in [8u32, 12] {
        let map = RescaledMap::at_m(&f, k, 0.4).unwrap();
        let rec = find_fixed_point_rescaled(&map, PlanarPoint::new(0.63, 0.63)).unwrap();
        let z = rec.rescaled[0];
        let (_, jr) = map.eval_with_jacobian(z).unwrap();
        let p = map.to_original(z).unwrap();
        let (q, jo) = map.rm.eval_with_jacobian(p).unwrap();
        assert!(q.dist(p) < 1e-9, "{q:?} {p:?}");
        assert!((jr.trace() - jo.trace()).abs() < 1e-7 * (1.0 + jo.trace().abs()));
        assert!((jr.det() - jo.det()).abs() < 1e-9);
        assert!((jo.det() + 1.0).abs() < 1e-10);
    }
}

#[test]
fn rescaled_map_converges_to_the_limit() {
    for lambda in [0.5, -0.5] {
        let f = mixed(lambda);
        let rep = convergence_report(&f, 8..=14, 0.5).unwrap();
        assert!(rep.bounded, "{rep:?}");
        let n: Vec<f64> = rep.rows.iter().map(|r| r.normalized_residual).collect();
        let (lo, hi) = n.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi < 100.0 && hi / lo < 3.0, "{n:?}");
        // the zero-order chain alone is first order: it halves per k
        let z: Vec<f64> = rep.rows.iter().map(|r| r.zero_order_residual).collect();
        assert!(z.windows(2).all(|w| w[1] < w[0]));
        assert!(rep.rows.iter().all(|r| r.sup_residual < r.zero_order_residual));
    }
}

#[test]
fn cubic_coefficient_matches_prediction() {
    let r = GlobalRecipe::generalized_henon(1.0, 0.3, 0.0, 1.0, 1.0);
    let f = build_family(LocalMapParams::new(0.5, vec![]).unwrap(), &r, 0.0).unwrap();
    assert!((f.taylor.f03 - 1.0).abs() < 1e-7);
    for k in 8..=14 {
        let map = RescaledMap::at_m(&f, k, 0.5).unwrap();
        let fit = fit_second_component_cubic(|z| map.eval(z), 9, 2.0).unwrap()[9];
        let want = f.taylor.f03 / (f.taylor.d * f.taylor.d) * 0.5f64.powi(k as i32);
        assert!((fit - want).abs() <= 0.1 * want, "k={k}: {fit} vs {want}");
    }
}
