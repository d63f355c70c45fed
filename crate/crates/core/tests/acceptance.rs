//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p homoclinic-core --test acceptance`.

use std::time::{Duration, Instant};

use homoclinic_core::atlas::{certify_global_resonance, run_cascade, run_strip_atlas, Degeneracy, Verdict};
use homoclinic_core::family::{build_family, tune_to, FamilyHandle, GlobalRecipe, LocalMapParams};
use homoclinic_core::henon::{
    bifurcation_values, birkhoff_b1, henon, horseshoe_certificate, two_periodic_orbit, HenonEvent, HenonParam,
};
use homoclinic_core::orbit::{locate_bifurcation, two_orbit_at_m, BifurcationKind};
use homoclinic_core::rescale::{convergence_report, fit_second_component_cubic, RescaledMap};
use homoclinic_core::return_map::{
    beta_slope, classify_from_evidence, count_components, cross_form_samples, t0_pow_closed, validate_cross_form,
    HorseshoeTag, ReturnMap,
};
use homoclinic_core::{PlanarPoint, Result};
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn gh_family(lambda: f64, beta: Vec<f64>, b: f64, p2: f64, d: f64, q3: f64, x_plus: f64) -> Result<FamilyHandle> {
    let r = GlobalRecipe::generalized_henon(b, p2, 0.0, d, q3).with_homoclinic_points(x_plus, 1.0);
    build_family(LocalMapParams::new(lambda, beta)?, &r, 0.0)
}

fn base(lambda: f64) -> Result<FamilyHandle> {
    gh_family(lambda, vec![1.0], 1.0, 0.3, 1.0, 0.0, 1.0)
}

fn lpow(lambda: f64, k: u32) -> f64 {
    lambda.abs().powi(k as i32)
}

fn rotation_slope(m: f64) -> Result<f64> {
    let c = two_periodic_orbit(HenonParam(m))?;
    let p = c.p1;
    let f = |z: PlanarPoint| henon(m, henon(m, z));
    let h = 1e-7;
    let col = |dx: f64, dy: f64| {
        let a = f(PlanarPoint::new(p.x + dx * h, p.y + dy * h));
        let b = f(PlanarPoint::new(p.x - dx * h, p.y - dy * h));
        ((a.x - b.x) / (2.0 * h), (a.y - b.y) / (2.0 * h))
    };
    let (j00, _) = col(1.0, 0.0);
    let (j01, j11) = col(0.0, 1.0);
    let theta = ((j00 + j11) / 2.0).acos();
    let (vr, vi) = ((j01, theta.cos() - j00), (0.0, theta.sin()));
    let det = vr.0 * vi.1 - vi.0 * vr.1;
    let angle = |r: f64| {
        let local = |z: PlanarPoint| {
            let (u, v) = (z.x - p.x, z.y - p.y);
            let (a, b) = ((vi.1 * u - vi.0 * v) / det, (-vr.1 * u + vr.0 * v) / det);
            b.atan2(a)
        };
        let mut z = PlanarPoint::new(p.x + r * vr.0, p.y + r * vr.1);
        let mut prev = local(z);
        let mut total = 0.0;
        let n = 4000;
        for _ in 0..n {
            z = f(z);
            let cur = local(z);
            let mut d = cur - prev;
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
    };
    Ok((angle(0.02) - angle(0.01)) / (0.02f64 * 0.02 - 0.01 * 0.01))
}

fn c1_henon() -> Result<Outcome> {
    let bif = bifurcation_values()?;
    let get = |e: HenonEvent| bif.iter().find(|b| b.event == e).map(|b| b.m).unwrap_or(f64::NAN);
    let errs = [
        get(HenonEvent::FixedPointBirth).abs(),
        (get(HenonEvent::PeriodDoubling) - 1.0).abs(),
        (get(HenonEvent::Resonance1To4) - 0.5).abs(),
        (get(HenonEvent::Resonance1To3) - 0.75).abs(),
    ];
    let twistless = get(HenonEvent::Twistless);
    let exact = errs.iter().all(|e| *e <= 1e-9);
    let tw_ok = (twistless - 0.625).abs() <= 1e-6;
    // rotation-number slope changes sign across 5/8 together with B1
    let (lo, hi) = (0.58, 0.67);
    let (s_lo, s_hi) = (rotation_slope(lo)?, rotation_slope(hi)?);
    let (b_lo, b_hi) = (birkhoff_b1(HenonParam(lo))?, birkhoff_b1(HenonParam(hi))?);
    let oracle = s_lo.signum() != s_hi.signum() && b_lo.signum() != b_hi.signum() && s_lo.signum() * b_lo.signum() == s_hi.signum() * b_hi.signum();
    outcome(
        exact && tw_ok && oracle,
        format!(
            "max |dM| {:.1e}, twistless {twistless:.9} (|dM| {:.1e}), rotation slope {s_lo:+.3}/{s_hi:+.3} vs B1 {b_lo:+.3}/{b_hi:+.3}",
            errs.iter().fold(0.0f64, |a, b| a.max(*b)),
            (twistless - 0.625).abs()
        ),
    )
}

fn c2_conservativity() -> Result<Outcome> {
    let families = vec![
        base(0.5)?,
        base(-0.5)?,
        tune_to(&base(0.5)?, -0.1, base(0.5)?.s0)?,
        tune_to(&base(0.5)?, 0.0, -0.4)?,
        gh_family(0.5, vec![], 1.0, 0.3, 1.0, 1.0, 1.0)?,
        gh_family(0.5, vec![], -1.0, 0.0, 1.0, 0.0, 1.0)?,
        gh_family(-0.5, vec![], -1.0, 0.0, 1.0, 0.0, 1.0)?,
        build_family(
            LocalMapParams::new(0.5, vec![0.5, 0.2])?,
            &GlobalRecipe::shear_sandwich(1.0, 0.3, 0.1, 1.0, 1.0),
            0.0,
        )?,
    ];
    let mut worst_t1 = 0.0f64;
    let mut worst_tk = 0.0f64;
    let mut orbits = 0;
    for f in &families {
        for k in [8u32, 10, 12, 14] {
            let mut pts = Vec::new();
            if let Ok(b) = locate_bifurcation(f, k, BifurcationKind::Plus) {
                pts.push((b.mu, b.orbit.points.clone()));
            }
            if let Ok(o) = two_orbit_at_m(f, k, 0.4, None) {
                pts.push((o.mu, o.points.clone()));
            }
            for (mu, ps) in pts {
                orbits += 1;
                let rm = ReturnMap::at_mu(f, k, mu)?;
                for p in ps {
                    let (_, j) = rm.eval_with_jacobian(p)?;
                    worst_tk = worst_tk.max((j.det() + 1.0).abs());
                    let q = t0_pow_closed(&f.local, p, k)?;
                    worst_t1 = worst_t1.max((f.global.jacobian(q)?.det() + 1.0).abs());
                }
            }
        }
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut worst_rel = 0.0f64;
    for f in &families {
        let expr = f.local.map_expr();
        for _ in 0..100 {
            let p = PlanarPoint::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.01..0.01));
            let k = rng.gen_range(1..=16u32);
            let a = t0_pow_closed(&f.local, p, k)?;
            let b = expr.iterate(p, k as usize)?;
            worst_rel = worst_rel.max(((a.x - b.x) / b.x).abs()).max(((a.y - b.y) / b.y).abs());
        }
    }
    outcome(
        orbits > 0 && worst_t1 <= 1e-10 && worst_tk <= 1e-10 && worst_rel <= 1e-12,
        format!(
            "{} families, {orbits} orbits: max |det DT1 + 1| {worst_t1:.1e}, max |det DT_k + 1| {worst_tk:.1e}; closed vs iterated T0^k {worst_rel:.1e}",
            families.len()
        ),
    )
}

fn c3_cross_form() -> Result<Outcome> {
    let samples = cross_form_samples(200);
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.5, -0.5] {
        for beta1 in [0.0, 1.0] {
            let local = LocalMapParams::new(lambda, vec![beta1])?;
            let reports = (6..=16).map(|k| validate_cross_form(&local, k, &samples)).collect::<Result<Vec<_>>>()?;
            let worst = reports.iter().map(|r| r.normalized).fold(0.0f64, f64::max);
            let tail = reports.last().map(|r| r.normalized).unwrap_or(f64::NAN);
            let bounded = worst.is_finite() && tail <= reports[0].normalized;
            let slope = beta_slope(&reports)?;
            let beta_ok = if beta1 == 0.0 { slope.abs() <= 0.05 } else { (slope - beta1).abs() <= 0.05 * beta1 };
            ok &= bounded && beta_ok;
            parts.push(format!("l={lambda:+} b1={beta1}: sup {worst:.2} slope {slope:.4}"));
        }
    }
    outcome(ok, parts.join("; "))
}

fn c4_cascade() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.5, -0.5] {
        let b = base(lambda)?;
        let f = tune_to(&b, -0.1, b.s0)?;
        let res = run_cascade(&f, 8..=14)?;
        let ratios: Vec<f64> = res.width_ratios.iter().filter(|(k, _)| *k >= 12).map(|r| r.1).collect();
        let ratio_ok = ratios.len() == 2 && ratios.iter().all(|r| (r - lambda * lambda).abs() <= 0.05 * lambda * lambda);
        let phase_ok = res.rows.iter().all(|r| r.phase_monotone);
        let flags_ok = res.rows.iter().all(|r| {
            [HenonEvent::Resonance1To4, HenonEvent::Resonance1To3, HenonEvent::Twistless]
                .iter()
                .all(|e| r.flags.iter().any(|fl| fl.event == *e))
        });
        let complete = res.failures.is_empty() && res.rows.len() == 7;
        let pass = complete
            && res.constant.is_finite()
            && res.constant_trend <= 0.0
            && ratio_ok
            && res.pairwise_disjoint
            && phase_ok
            && flags_ok;
        ok &= pass;
        parts.push(format!(
            "l={lambda:+}: C {:.3} trend {:+.3}, ratios {:.4}/{:.4}, disjoint {}, monotone {}, flags {}",
            res.constant,
            res.constant_trend,
            ratios.first().unwrap_or(&f64::NAN),
            ratios.get(1).unwrap_or(&f64::NAN),
            res.pairwise_disjoint,
            phase_ok,
            flags_ok
        ));
    }
    outcome(ok, parts.join("; "))
}

fn c5_rescale() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.5, -0.5] {
        let r = GlobalRecipe::generalized_henon(1.0, 0.3, 0.1, 1.0, 0.5).with_homoclinic_points(0.9, 1.0);
        let f = build_family(LocalMapParams::new(lambda, vec![1.0])?, &r, 0.0)?;
        let rep = convergence_report(&f, 8..=14, 0.5)?;
        let n: Vec<f64> = rep.rows.iter().map(|r| r.normalized_residual).collect();
        let hi = n.iter().fold(0.0f64, |a, b| a.max(*b));
        ok &= rep.bounded && hi.is_finite();
        parts.push(format!("l={lambda:+}: residual/(k l^2k) <= {hi:.2}, log slope {:.3} (expected {:.3})", rep.raw_log_slope, rep.expected_log_slope));
    }
    let f = gh_family(0.5, vec![], 1.0, 0.3, 1.0, 1.0, 1.0)?;
    let mut worst = 0.0f64;
    for k in 8..=14 {
        let map = RescaledMap::at_m(&f, k, 0.5)?;
        let fit = fit_second_component_cubic(|z| map.eval(z), 9, 2.0)?[9];
        let want = f.taylor.f03 / (f.taylor.d * f.taylor.d) * 0.5f64.powi(k as i32);
        worst = worst.max(((fit - want) / want).abs());
    }
    ok &= worst <= 0.1 && (f.taylor.f03 - 1.0).abs() < 1e-6;
    parts.push(format!("Y^3 fit max rel error {worst:.2e}"));
    outcome(ok, parts.join("; "))
}

fn c6_atlas() -> Result<Outcome> {
    let t = tune_to(&base(0.5)?, 0.0, -0.4)?;
    let atlas = run_strip_atlas(&t, 8..=12, 0.05, 41)?;
    let worst = atlas.curves.iter().map(|c| c.slope_rel_error).fold(0.0f64, f64::max);
    let zero = atlas.alphas.iter().position(|a| a.abs() < 1e-12);
    let band_ok = zero.is_some_and(|z| atlas.resonant_band.contains(&z));
    let pass = atlas.failures.is_empty() && worst <= 0.05 && atlas.disjoint_far && band_ok;
    let band = match (atlas.resonant_band.first(), atlas.resonant_band.last()) {
        (Some(&a), Some(&b)) => format!("[{:+.4}, {:+.4}]", atlas.alphas[a], atlas.alphas[b]),
        _ => "empty".into(),
    };
    outcome(
        pass,
        format!(
            "max slope error {:.2}%, disjoint for |alpha| >= {:.4}: {}, band {band}, failures {}",
            100.0 * worst,
            atlas.disjoint_threshold,
            atlas.disjoint_far,
            atlas.failures.len()
        ),
    )
}

fn c7_resonance() -> Result<Outcome> {
    let b = base(0.5)?;
    let f = tune_to(&b, 0.0, -0.4)?;
    let cert = certify_global_resonance(&f, 8..=14)?;
    let all_elliptic = cert.rows.len() == 7 && cert.rows.iter().all(|r| r.orbit.as_ref().is_some_and(|o| o.is_elliptic()));
    let errs: Vec<f64> = cert.rows.iter().filter_map(|r| r.cos_phi_error).collect();
    let shrinking = errs.len() == 7 && errs.last() < errs.first();
    let mut ok = cert.verdict == Verdict::Certified && all_elliptic && shrinking && (cert.predicted_cos_phi - 0.2).abs() < 1e-7;
    let mut parts = vec![format!(
        "s0=-0.4: {:?}, C {:.3}, |cos phi - 0.2| {:.1e} -> {:.1e}",
        cert.verdict,
        cert.constant,
        errs.first().unwrap_or(&f64::NAN),
        errs.last().unwrap_or(&f64::NAN)
    )];
    for (s0, flag) in [(-0.5, Degeneracy::Resonance1To4), (-0.625, Degeneracy::Twistless), (-0.75, Degeneracy::Resonance1To3)] {
        let f = tune_to(&b, 0.0, s0)?;
        let cert = certify_global_resonance(&f, 8..=14)?;
        let flagged = cert.flags.contains(&flag) && cert.verdict != Verdict::Certified;
        ok &= flagged;
        parts.push(format!("s0={s0}: {:?} {:?}", cert.flags, cert.verdict));
    }
    outcome(ok, parts.join("; "))
}

fn c8_horseshoe_table() -> Result<Outcome> {
    let cases = [
        ("l>0,c<0,d<0", gh_family(0.5, vec![], -1.0, 0.0, -1.0, 0.0, 1.0)?, HorseshoeTag::Empty),
        ("l>0,c<0,d>0", gh_family(0.5, vec![], -1.0, 0.0, 1.0, 0.0, 1.0)?, HorseshoeTag::Regular),
        ("l<0,c<0,d>0", gh_family(-0.5, vec![], -1.0, 0.0, 1.0, 0.0, 1.0)?, HorseshoeTag::ParityAlternating),
        ("c>0,alpha=-0.2", gh_family(0.5, vec![], 2.5, 0.0, 1.0, 0.0, 2.0)?, HorseshoeTag::AlphaNegativeHorseshoes),
        ("c>0,alpha=+0.2", gh_family(0.5, vec![], 1.0 / 0.6, 0.0, 1.0, 0.0, 2.0)?, HorseshoeTag::AlphaPositiveTrivial),
    ];
    let mut wrong = 0;
    let mut inconclusive = 0;
    let mut parts = Vec::new();
    for (name, f, want) in cases {
        let mut counts = Vec::new();
        for k in 8..=14 {
            let c = count_components(&f, k)?;
            let expected = match want {
                HorseshoeTag::Empty | HorseshoeTag::AlphaPositiveTrivial => 0,
                HorseshoeTag::ParityAlternating => {
                    if k % 2 == 0 {
                        2
                    } else {
                        0
                    }
                }
                _ => 2,
            };
            if !c.conclusive() {
                inconclusive += 1;
                if f.alpha.abs() >= 10.0 * lpow(f.local.lambda, k) {
                    wrong += 1;
                }
            } else if c.components != expected {
                wrong += 1;
            }
            counts.push(c);
        }
        let tag = classify_from_evidence(&f, counts).map(|c| c.tag);
        if tag.as_ref().ok() != Some(&want) {
            wrong += 1;
        }
        parts.push(format!("{name}: {:?}", tag.map_err(|e| e.to_string())));
    }
    outcome(wrong == 0, format!("misclassified {wrong}, inconclusive {inconclusive}; {}", parts.join(", ")))
}

fn c9_henon_horseshoe() -> Result<Outcome> {
    let yes = [9.5, 10.0, 12.0].iter().all(|&m| horseshoe_certificate(HenonParam(m)));
    let no = [-1.0, 0.5, 2.0].iter().all(|&m| !horseshoe_certificate(HenonParam(m)));
    outcome(yes && no, format!("certified at 9.5/10/12: {yes}, rejected at -1/0.5/2: {no}"))
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 henon analytics", Duration::from_secs(5), c1_henon),
        ("2 conservativity", Duration::from_secs(10), c2_conservativity),
        ("3 cross form", Duration::from_secs(30), c3_cross_form),
        ("4 cascade", Duration::from_secs(120), c4_cascade),
        ("5 rescaling", Duration::from_secs(120), c5_rescale),
        ("6 strip atlas", Duration::from_secs(300), c6_atlas),
        ("7 global resonance", Duration::from_secs(60), c7_resonance),
        ("8 horseshoe table", Duration::from_secs(120), c8_horseshoe_table),
        ("9 henon horseshoe", Duration::from_secs(10), c9_henon_horseshoe),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass && took < limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {:.2} s (limit {} s) | {detail}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
