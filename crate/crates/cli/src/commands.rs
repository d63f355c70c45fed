//! One function per subcommand. Each returns the JSON payload plus the
//! CSV tables and SVG plots derived from it.

use homoclinic_core::atlas::{
    alpha_grid, cascade_row, resonance_row, summarize_cascade, summarize_resonance, summarize_strips, trace_strip,
    validate_resonance_family, KFailure,
};
use homoclinic_core::family::{audit_family, build_family, tune_to, FamilyHandle, GlobalRecipe, LocalMapParams};
use homoclinic_core::henon::{
    bifurcation_values, birkhoff_b1, fixed_points, horseshoe_certificate, horseshoe_rectangles, horseshoe_threshold,
    two_orbit_phase, two_periodic_orbit, HenonParam,
};
use homoclinic_core::rescale::{convergence_row, fit_second_component_cubic, grid, summarize, RescaledMap};
use homoclinic_core::return_map::{
    beta_slope, classify_from_evidence, count_components, cross_form_samples, k_max, k_min, validate_cross_form,
};
use homoclinic_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{num, opt, Artifacts, Table};
use crate::svg::{Plot, Style};
use crate::CliError;

type Res<T> = Result<T, CliError>;

fn to_value<T: Serialize>(v: &T) -> Res<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

/// Serialized name of a unit enum variant.
fn tag<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn checked_k_range(cfg: &RunConfig, fam: &FamilyHandle, default: (u32, u32)) -> Res<(u32, u32)> {
    let (a, b) = cfg.k_range(default);
    let (lo, hi) = (k_min(fam), k_max(fam.local.lambda));
    if a < lo {
        return Err(Error::KOutOfRange { k: a, k_min: lo, k_max: hi }.into());
    }
    if b > hi {
        return Err(Error::KOutOfRange { k: b, k_min: lo, k_max: hi }.into());
    }
    Ok((a, b))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
struct ScanRow {
    #[serde(rename = "M")]
    m: f64,
    trace: Option<f64>,
    phi: Option<f64>,
    b1: Option<f64>,
    b1_error: Option<String>,
}

pub fn henon(cfg: &RunConfig) -> Res<Artifacts> {
    let e = &cfg.experiment;
    let bif = bifurcation_values()?;
    let scan: Vec<ScanRow> = linspace(e.m_min, e.m_max, e.m_points)
        .into_par_iter()
        .map(|m| {
            let b1 = birkhoff_b1(HenonParam(m));
            ScanRow {
                m,
                trace: two_periodic_orbit(HenonParam(m)).ok().map(|t| t.trace),
                phi: two_orbit_phase(m),
                b1: b1.as_ref().ok().copied(),
                b1_error: b1.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let horseshoe: Vec<Value> = e
        .horseshoe_m
        .par_iter()
        .map(|&m| {
            let rect = horseshoe_rectangles(HenonParam(m));
            json!({ "M": m, "certified": rect.is_some(), "rectangles": rect.map(|(big, small)| json!({ "R": big, "r": small })) })
        })
        .collect();
    let mut warnings = Vec::new();
    let point = match e.m {
        Some(m) => {
            let hp = HenonParam(m);
            let b1 = birkhoff_b1(hp);
            if let Err(err) = &b1 {
                warnings.push(format!("twist coefficient at M = {m}: {err}"));
            }
            json!({
                "M": m,
                "fixed_points": to_value(&fixed_points(hp))?,
                "two_orbit": to_value(&two_periodic_orbit(hp).ok())?,
                "b1": b1.as_ref().ok(),
                "b1_error": b1.as_ref().err().map(|e| e.to_string()),
                "horseshoe_certified": horseshoe_certificate(hp),
            })
        }
        None => Value::Null,
    };
    let payload = json!({
        "bifurcations": to_value(&bif)?,
        "horseshoe_threshold": horseshoe_threshold(),
        "horseshoe": horseshoe,
        "scan": to_value(&scan)?,
        "point": point,
    });

    let mut tb = Table::new("henon_bifurcations", &["event", "M", "residual"]);
    for b in &bif {
        tb.push(vec![tag(&b.event), num(b.m), num(b.residual)]);
    }
    let mut ts = Table::new("henon_scan", &["M", "trace", "phi", "b1"]);
    for r in &scan {
        ts.push(vec![num(r.m), opt(r.trace), opt(r.phi), opt(r.b1)]);
    }
    let mut th = Table::new("henon_horseshoe", &["M", "certified"]);
    for h in &horseshoe {
        th.push(vec![num(h["M"].as_f64().unwrap_or(f64::NAN)), h["certified"].to_string()]);
    }
    let plot = Plot::new("Twist coefficient of the 2-orbit", "M", "B1")
        .series("B1", scan.iter().map(|r| (r.m, r.b1.unwrap_or(f64::NAN))).collect(), Style::Line)
        .series("bifurcations", bif.iter().map(|b| (b.m, 0.0)).collect(), Style::Markers)
        .hline(0.0);
    Ok(Artifacts { payload, tables: vec![tb, ts, th], plots: vec![("henon_b1".into(), plot.render())], warnings })
}

pub fn family_check(cfg: &RunConfig) -> Res<Artifacts> {
    let fam = cfg.family.build()?;
    let audit = audit_family(&fam, cfg.experiment.samples)?;
    let mut warnings = Vec::new();
    if !audit.passed {
        warnings.push("invariant audit failed".to_string());
    }
    let bc_pass = audit.bc_residual <= 1e-10;
    let det_identity_pass = audit.det_identity_residual <= 1e-8;
    let taylor = to_value(&fam.taylor)?;
    let payload = json!({
        "family": to_value(&cfg.family)?,
        "taylor": taylor,
        "alpha": fam.alpha,
        "s0": fam.s0,
        "k_min": k_min(&fam),
        "k_max": k_max(fam.local.lambda),
        "audit": to_value(&audit)?,
        "bc_pass": bc_pass,
        "det_identity_pass": det_identity_pass,
    });
    let mut t = Table::new("taylor", &["coefficient", "value"]);
    if let Value::Object(map) = &taylor {
        for (k, v) in map {
            t.push(vec![k.clone(), num(v.as_f64().unwrap_or(f64::NAN))]);
        }
    }
    t.push(vec!["alpha".into(), num(fam.alpha)]);
    t.push(vec!["s0".into(), num(fam.s0)]);
    let delta = fam.global.window_half_width();
    let etas = linspace(-delta, delta, 101);
    let img = fam.unstable_image(&etas)?;
    let plot = Plot::new("Image of the local unstable manifold near the tangency", "x - x+", "y")
        .series("T1(W^u_loc)", img.iter().map(|p| (p.x - fam.global.x_plus, p.y)).collect(), Style::Line)
        .hline(0.0);
    Ok(Artifacts { payload, tables: vec![t], plots: vec![("family_unstable_image".into(), plot.render())], warnings })
}

pub fn cross_form(cfg: &RunConfig) -> Res<Artifacts> {
    let local = LocalMapParams::new(cfg.family.lambda, cfg.family.beta.clone())?;
    let (a, b) = cfg.k_range((6, 16));
    let hi = k_max(local.lambda);
    if a < 1 || b > hi {
        return Err(Error::KOutOfRange { k: if a < 1 { a } else { b }, k_min: 1, k_max: hi }.into());
    }
    let samples = cross_form_samples(cfg.experiment.samples);
    let reports = (a..=b).into_par_iter().map(|k| validate_cross_form(&local, k, &samples)).collect::<Result<Vec<_>, _>>()?;
    let slope = if reports.len() >= 2 { Some(beta_slope(&reports)?) } else { None };
    let max_norm = reports.iter().map(|r| r.normalized).fold(0.0, f64::max);
    let payload = json!({
        "lambda": local.lambda,
        "beta1": local.beta1(),
        "reports": to_value(&reports)?,
        "beta_slope": slope,
        "max_normalized": max_norm,
    });
    let mut t = Table::new("cross_form", &["k", "samples", "sup_residual", "normalized", "beta_tilde", "beta_tilde_over_k"]);
    for r in &reports {
        t.push(vec![
            r.k.to_string(),
            r.samples.to_string(),
            num(r.sup_residual),
            num(r.normalized),
            num(r.beta_tilde),
            num(r.beta_tilde / r.k as f64),
        ]);
    }
    let plot = Plot::new("Cross-form residual / lambda^(2k)", "k", "normalized residual")
        .series("normalized", reports.iter().map(|r| (r.k as f64, r.normalized)).collect(), Style::Line)
        .series("", reports.iter().map(|r| (r.k as f64, r.normalized)).collect(), Style::Markers);
    Ok(Artifacts { payload, tables: vec![t], plots: vec![("cross_form".into(), plot.render())], warnings: vec![] })
}

/// The sign cases of the horseshoe table: `(name, lambda, b, d, x_plus)`.
pub const SIGN_TABLE: [(&str, f64, f64, f64, f64); 5] = [
    ("lambda>0,c<0,d<0", 0.5, -1.0, -1.0, 1.0),
    ("lambda>0,c<0,d>0", 0.5, -1.0, 1.0, 1.0),
    ("lambda<0,c<0,d>0", -0.5, -1.0, 1.0, 1.0),
    ("c>0,alpha=-0.2", 0.5, 2.5, 1.0, 2.0),
    ("c>0,alpha=+0.2", 0.5, 1.0 / 0.6, 1.0, 2.0),
];

pub fn sign_table_family(lambda: f64, b: f64, d: f64, x_plus: f64) -> homoclinic_core::Result<FamilyHandle> {
    let r = GlobalRecipe::generalized_henon(b, 0.0, 0.0, d, 0.0).with_homoclinic_points(x_plus, 1.0);
    build_family(LocalMapParams::new(lambda, vec![])?, &r, 0.0)
}

pub fn classify(cfg: &RunConfig) -> Res<Artifacts> {
    let cases: Vec<(String, FamilyHandle)> = if cfg.experiment.table {
        SIGN_TABLE
            .iter()
            .map(|&(n, l, b, d, xp)| Ok((n.to_string(), sign_table_family(l, b, d, xp)?)))
            .collect::<homoclinic_core::Result<_>>()?
    } else {
        vec![("configured".to_string(), cfg.family.build()?)]
    };
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    let mut t = Table::new("classify", &["case", "k", "components", "spanning", "stable", "predicted", "conclusive", "tag"]);
    let mut plot = Plot::new("Components of the strip intersection at mu = 0", "k", "components");
    for (i, (name, fam)) in cases.iter().enumerate() {
        let (a, b) = checked_k_range(cfg, fam, (8, 14))?;
        let counts = (a..=b).into_par_iter().map(|k| count_components(fam, k)).collect::<Result<Vec<_>, _>>()?;
        let class = classify_from_evidence(fam, counts.clone());
        let tag_s = match &class {
            Ok(c) => tag(&c.tag),
            Err(e) => {
                if !cfg.experiment.table {
                    return Err(e.clone().into());
                }
                warnings.push(format!("{name}: {e}"));
                "inconclusive".into()
            }
        };
        for c in &counts {
            t.push(vec![
                name.clone(),
                c.k.to_string(),
                c.components.to_string(),
                c.spanning.to_string(),
                c.stable.to_string(),
                c.predicted.to_string(),
                c.conclusive().to_string(),
                tag_s.clone(),
            ]);
        }
        let off = 0.06 * i as f64;
        plot = plot.series(name, counts.iter().map(|c| (c.k as f64, c.components as f64 + off)).collect(), Style::Markers);
        out.push(json!({
            "case": name,
            "lambda": fam.local.lambda,
            "b": fam.taylor.b,
            "c": fam.taylor.c,
            "d": fam.taylor.d,
            "x_plus": fam.global.x_plus,
            "y_minus": fam.global.y_minus,
            "alpha": fam.alpha,
            "class": class.as_ref().ok().map(to_value).transpose()?,
            "error": class.as_ref().err().map(to_value).transpose()?,
            "evidence": to_value(&counts)?,
        }));
    }
    Ok(Artifacts { payload: json!({ "cases": out }), tables: vec![t], plots: vec![("classify".into(), plot.render())], warnings })
}

pub fn cascade(cfg: &RunConfig) -> Res<Artifacts> {
    let fam = cfg.family.build()?;
    let (a, b) = checked_k_range(cfg, &fam, (8, 14))?;
    let results: Vec<(u32, homoclinic_core::Result<_>)> = (a..=b).into_par_iter().map(|k| (k, cascade_row(&fam, k))).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results {
        match r {
            Ok(r) => rows.push(r),
            Err(error) => failures.push(KFailure { k, error }),
        }
    }
    let res = summarize_cascade(&fam, rows, failures)?;
    let mut warnings: Vec<String> = res.failures.iter().map(|f| format!("k = {}: {}", f.k, f.error)).collect();
    if res.rows.is_empty() {
        return Err(res.failures.first().map(|f| f.error.clone()).unwrap_or(Error::NoConvergence("cascade")).into());
    }
    for r in res.rows.iter().filter(|r| !r.phase_monotone) {
        warnings.push(format!("k = {}: phase not monotone across the interval", r.k));
    }
    let payload = json!({ "alpha": fam.alpha, "s0": fam.s0, "lambda": fam.local.lambda, "result": to_value(&res)? });

    let mut t = Table::new(
        "cascade",
        &["k", "mu_plus", "mu_minus", "predicted_plus", "predicted_minus", "lo", "hi", "width", "deviation", "deviation_constant", "phase_monotone"],
    );
    let mut tp = Table::new("cascade_phase", &["k", "mu", "M", "trace", "phi"]);
    let mut tf = Table::new("cascade_flags", &["k", "event", "mu", "M", "cos_phi"]);
    let mut seg = Vec::new();
    let mut phase_plot = Plot::new("Rotation angle of the 2-orbit across e_k", "(mu - mu_k+) / (mu_k- - mu_k+)", "phi");
    for r in &res.rows {
        t.push(vec![
            r.k.to_string(),
            num(r.mu_plus),
            num(r.mu_minus),
            num(r.predicted_plus),
            num(r.predicted_minus),
            num(r.interval.0),
            num(r.interval.1),
            num(r.width),
            num(r.deviation),
            num(r.deviation_constant),
            r.phase_monotone.to_string(),
        ]);
        for p in &r.phase {
            tp.push(vec![r.k.to_string(), num(p.mu), num(p.m), num(p.trace), num(p.phi)]);
        }
        for f in &r.flags {
            tf.push(vec![r.k.to_string(), tag(&f.event), num(f.mu), num(f.m), num(f.cos_phi)]);
        }
        seg.push((r.interval.0, r.k as f64));
        seg.push((r.interval.1, r.k as f64));
        let span = r.mu_minus - r.mu_plus;
        phase_plot = phase_plot.series(
            &format!("k = {}", r.k),
            r.phase.iter().map(|p| ((p.mu - r.mu_plus) / span, p.phi)).collect(),
            Style::Line,
        );
    }
    let mut cas = Plot::new("Intervals e_k of elliptic 2-orbits", "mu", "k").series("e_k", seg, Style::Segments);
    cas.vlines.push(0.0);
    Ok(Artifacts {
        payload,
        tables: vec![t, tp, tf],
        plots: vec![("cascade".into(), cas.render()), ("cascade_phase".into(), phase_plot.render())],
        warnings,
    })
}

pub fn atlas2d(cfg: &RunConfig) -> Res<Artifacts> {
    let template = cfg.family.build()?;
    let (a, b) = checked_k_range(cfg, &template, (8, 12))?;
    let ks: Vec<u32> = (a..=b).collect();
    let alphas = alpha_grid(cfg.experiment.eps, cfg.experiment.n_alpha);
    let families: Vec<_> = alphas.par_iter().map(|&al| tune_to(&template, al, template.s0)).collect();
    let traces: Vec<_> = ks.par_iter().map(|&k| trace_strip(&families, k)).collect();
    let atlas = summarize_strips(&template, &ks, &alphas, traces)?;
    let mut warnings: Vec<String> = atlas
        .failures
        .iter()
        .map(|f| format!("k = {}, alpha = {}, {}: {}", f.k, alphas[f.alpha_index], tag(&f.kind), f.error))
        .collect();
    if atlas.resonant_band.is_empty() {
        warnings.push("no alpha in the grid where all strips cross mu = 0".into());
    }
    let payload = json!({ "s0": template.s0, "lambda": template.local.lambda, "atlas": to_value(&atlas)? });
    let mut t = Table::new("atlas", &["k", "alpha", "mu_plus", "mu_minus"]);
    let mut ts = Table::new("atlas_slopes", &["k", "slope_plus", "slope_minus", "predicted_slope", "rel_error"]);
    let mut plot = Plot::new("Strip boundaries L_k in the (mu, alpha) plane", "mu", "alpha");
    for c in &atlas.curves {
        for (i, al) in alphas.iter().enumerate() {
            t.push(vec![c.k.to_string(), num(*al), opt(c.plus[i]), opt(c.minus[i])]);
        }
        ts.push(vec![c.k.to_string(), num(c.slope), num(c.slope_minus), num(c.predicted_slope), num(c.slope_rel_error)]);
        let pts = |v: &Vec<Option<f64>>| alphas.iter().zip(v).map(|(al, m)| (m.unwrap_or(f64::NAN), *al)).collect();
        plot = plot.series(&format!("L{}+", c.k), pts(&c.plus), Style::Line).series(&format!("L{}-", c.k), pts(&c.minus), Style::Line);
    }
    plot.vlines.push(0.0);
    Ok(Artifacts { payload, tables: vec![t, ts], plots: vec![("atlas".into(), plot.render())], warnings })
}

pub fn resonance(cfg: &RunConfig) -> Res<Artifacts> {
    let mut fc = cfg.family.clone();
    if fc.alpha.is_none() {
        fc.alpha = Some(0.0);
    }
    if let Some(s0) = fc.s0 {
        if !(s0 > -1.0 && s0 < 0.0) {
            return Err(Error::NotInResonanceWindow { s0 }.into());
        }
    }
    let fam = fc.build()?;
    validate_resonance_family(&fam)?;
    let (a, b) = checked_k_range(cfg, &fam, (8, 14))?;
    let rows: Vec<_> = (a..=b).into_par_iter().map(|k| resonance_row(&fam, k)).collect();
    let cert = summarize_resonance(&fam, (a, b), rows);
    let mut warnings: Vec<String> = cert
        .flags
        .iter()
        .map(|f| format!("degeneracy {} at s0 = {}: genericity not claimed", tag(f), f.s0()))
        .collect();
    for r in &cert.rows {
        if let Some(e) = &r.error {
            warnings.push(format!("k = {}: {e}", r.k));
        }
    }
    let payload = json!({ "certificate": to_value(&cert)? });
    let mut t = Table::new(
        "resonance",
        &["k", "M", "cos_phi", "predicted_cos_phi", "cos_phi_error", "error_constant", "elliptic", "lo", "hi"],
    );
    for r in &cert.rows {
        t.push(vec![
            r.k.to_string(),
            num(r.m),
            opt(r.cos_phi),
            num(cert.predicted_cos_phi),
            opt(r.cos_phi_error),
            opt(r.error_constant),
            r.orbit.as_ref().is_some_and(|o| o.is_elliptic()).to_string(),
            opt(r.interval.map(|i| i.0)),
            opt(r.interval.map(|i| i.1)),
        ]);
    }
    let plot = Plot::new("cos(phi) of the 2-orbit at mu = 0", "k", "cos phi")
        .series("measured", cert.rows.iter().map(|r| (r.k as f64, r.cos_phi.unwrap_or(f64::NAN))).collect(), Style::Markers)
        .hline(cert.predicted_cos_phi);
    Ok(Artifacts { payload, tables: vec![t], plots: vec![("resonance".into(), plot.render())], warnings })
}

pub fn rescale_verify(cfg: &RunConfig) -> Res<Artifacts> {
    let fam = cfg.family.build()?;
    let m = cfg.experiment.m.unwrap_or(0.5);
    let (a, b) = checked_k_range(cfg, &fam, (8, 14))?;
    let pts = grid(9, 2.0);
    let per_k = (a..=b)
        .into_par_iter()
        .map(|k| -> homoclinic_core::Result<_> {
            let row = convergence_row(&fam, k, m, &pts)?;
            let map = RescaledMap::at_m(&fam, k, m)?;
            let fit = fit_second_component_cubic(|z| map.eval(z), 9, 2.0)?[9];
            Ok((row, fit, map.cubic, map.chain))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<_> = per_k.iter().map(|p| p.0.clone()).collect();
    let report = summarize(&fam, m, rows)?;
    let mut warnings = Vec::new();
    if !report.bounded {
        warnings.push("normalized residual is not bounded over the k range".into());
    }
    let cubic: Vec<Value> = per_k
        .iter()
        .map(|(r, fit, pred, _)| json!({ "k": r.k, "fitted": fit, "predicted": pred, "rel_error": ((fit - pred) / pred).abs() }))
        .collect();
    let chains: Vec<Value> = per_k.iter().map(|p| to_value(&p.3)).collect::<Res<_>>()?;
    let payload = json!({ "report": to_value(&report)?, "cubic": cubic, "chains": chains });
    let mut t = Table::new(
        "rescale",
        &["k", "M", "sup_residual", "normalized_residual", "zero_order_residual", "m_effective", "cubic_fit", "cubic_predicted"],
    );
    for (r, fit, pred, _) in &per_k {
        t.push(vec![
            r.k.to_string(),
            num(r.m),
            num(r.sup_residual),
            num(r.normalized_residual),
            num(r.zero_order_residual),
            num(r.m_effective),
            num(*fit),
            num(*pred),
        ]);
    }
    let lg = |v: f64| if v > 0.0 { v.log10() } else { f64::NAN };
    let plot = Plot::new("Rescaled return map vs limit map", "k", "log10 residual")
        .series("after normalization", report.rows.iter().map(|r| (r.k as f64, lg(r.sup_residual))).collect(), Style::Line)
        .series("zero-order chain", report.rows.iter().map(|r| (r.k as f64, lg(r.zero_order_residual))).collect(), Style::Line)
        .series("normalized by k lambda^2k", report.rows.iter().map(|r| (r.k as f64, lg(r.normalized_residual))).collect(), Style::Line);
    Ok(Artifacts { payload, tables: vec![t], plots: vec![("rescale".into(), plot.render())], warnings })
}
