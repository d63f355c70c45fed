//! Cascades of elliptic 2-orbits in `mu`, strips in the `(mu, alpha)` plane
//! and the certificate for the globally resonant case `alpha = 0`.
//!
//! Everything here is per-`k` (or per-`(k, alpha)`) and pure, so callers can
//! farm rows out to threads and merge them with the `summarize_*` functions.

use alloc::vec::Vec;

use crate::family::{tune_to, FamilyHandle};
use crate::henon::HenonEvent;
use crate::math;
use crate::numeric::{brent, theil_sen};
use crate::orbit::{
    locate_bifurcation, locate_bifurcation_from, two_orbit_at_m, two_orbit_of, BifurcationKind, OrbitRecord,
};
use crate::rescale::RescaledMap;
use crate::return_map::ReturnMap;
use crate::{Error, Result};

fn lambda_pow(lambda: f64, k: u32) -> f64 {
    let mag = math::exp(k as f64 * math::ln(lambda.abs()));
    if lambda < 0.0 && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Trace targets `2 cos(phi)` of the flagged resonances.
pub const RESONANCE_TRACES: [(HenonEvent, f64); 3] =
    [(HenonEvent::Resonance1To4, 0.0), (HenonEvent::Resonance1To3, -1.0), (HenonEvent::Twistless, -0.5)];

/// Samples of the rotation angle across `e_k`.
pub const PHASE_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PhaseSample {
    pub mu: f64,
    pub m: f64,
    pub trace: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResonanceFlag {
    pub event: HenonEvent,
    pub mu: f64,
    pub m: f64,
    pub cos_phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CascadeRow {
    pub k: u32,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub predicted_plus: f64,
    pub predicted_minus: f64,
    /// `e_k` as `(lo, hi)`.
    pub interval: (f64, f64),
    pub width: f64,
    /// `max |mu - predicted| / lambda^(2k)` over both ends.
    pub deviation: f64,
    /// `deviation / (k |lambda|^k)`.
    pub deviation_constant: f64,
    pub phase: Vec<PhaseSample>,
    pub phase_monotone: bool,
    pub flags: Vec<ResonanceFlag>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KFailure {
    pub k: u32,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CascadeResult {
    pub rows: Vec<CascadeRow>,
    pub failures: Vec<KFailure>,
    /// `(k, |e_{k+1}| / |e_k|)` for consecutive rows.
    pub width_ratios: Vec<(u32, f64)>,
    pub lambda_squared: f64,
    /// Largest `deviation_constant`.
    pub constant: f64,
    /// Theil-Sen slope of `deviation_constant` against `k`.
    pub constant_trend: f64,
    pub pairwise_disjoint: bool,
    /// Every interval contains `mu = 0`.
    pub all_contain_zero: bool,
}

/// One row of the cascade: both ends of `e_k`, the phase curve between them
/// and the resonance crossings.
pub fn cascade_row(family: &FamilyHandle, k: u32) -> Result<CascadeRow> {
    let plus = locate_bifurcation(family, k, BifurcationKind::Plus)?;
    let minus = locate_bifurcation(family, k, BifurcationKind::Minus)?;
    let l = family.local.lambda;
    let l2k = lambda_pow(l, 2 * k);
    let deviation = ((plus.mu - plus.predicted_mu).abs()).max((minus.mu - minus.predicted_mu).abs()) / l2k;

    let mut phase = Vec::with_capacity(PHASE_SAMPLES);
    let mut seed = None;
    let mut samples: Vec<(f64, OrbitRecord)> = Vec::with_capacity(PHASE_SAMPLES);
    for j in 0..PHASE_SAMPLES {
        let t = (j + 1) as f64 / (PHASE_SAMPLES + 1) as f64;
        let m = plus.m + t * (minus.m - plus.m);
        let rec = two_orbit_at_m(family, k, m, seed)?;
        seed = Some(rec.rescaled[0]);
        if rec.trace.abs() >= 2.0 {
            return Err(Error::NotElliptic { trace: rec.trace });
        }
        phase.push(PhaseSample { mu: rec.mu, m, trace: rec.trace, phi: math::acos(0.5 * rec.trace) });
        samples.push((m, rec));
    }
    let dir = (phase[1].phi - phase[0].phi).signum();
    let phase_monotone = dir != 0.0 && phase.windows(2).all(|w| (w[1].phi - w[0].phi) * dir > 0.0);

    let mut flags = Vec::new();
    let trace_at = |m: f64| -> Result<f64> { Ok(two_orbit_at_m(family, k, m, None)?.trace) };
    for (event, target) in RESONANCE_TRACES {
        for w in samples.windows(2) {
            let (m0, r0) = (&w[0].0, &w[0].1);
            let (m1, r1) = (&w[1].0, &w[1].1);
            if (r0.trace - target) * (r1.trace - target) <= 0.0 {
                let m = brent(|m| Ok(trace_at(m)? - target), *m0, *m1, 1e-13, 200)?;
                let rec = two_orbit_at_m(family, k, m, None)?;
                flags.push(ResonanceFlag { event, mu: rec.mu, m, cos_phi: 0.5 * rec.trace });
                break;
            }
        }
    }

    let (lo, hi) = if plus.mu < minus.mu { (plus.mu, minus.mu) } else { (minus.mu, plus.mu) };
    Ok(CascadeRow {
        k,
        mu_plus: plus.mu,
        mu_minus: minus.mu,
        predicted_plus: plus.predicted_mu,
        predicted_minus: minus.predicted_mu,
        interval: (lo, hi),
        width: hi - lo,
        deviation,
        deviation_constant: deviation / (k as f64 * lambda_pow(l.abs(), k)),
        phase,
        phase_monotone,
        flags,
    })
}

fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

pub fn summarize_cascade(family: &FamilyHandle, mut rows: Vec<CascadeRow>, mut failures: Vec<KFailure>) -> Result<CascadeResult> {
    rows.sort_by_key(|r| r.k);
    failures.sort_by_key(|f| f.k);
    let width_ratios: Vec<(u32, f64)> =
        rows.windows(2).filter(|w| w[1].k == w[0].k + 1).map(|w| (w[0].k, w[1].width / w[0].width)).collect();
    let mut disjoint = true;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if intervals_overlap(rows[i].interval, rows[j].interval) {
                disjoint = false;
            }
        }
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let cs: Vec<f64> = rows.iter().map(|r| r.deviation_constant).collect();
    let trend = if rows.len() >= 2 { theil_sen(&ks, &cs)? } else { 0.0 };
    let l = family.local.lambda;
    Ok(CascadeResult {
        constant: cs.iter().fold(0.0f64, |a, b| a.max(*b)),
        constant_trend: trend,
        pairwise_disjoint: disjoint,
        all_contain_zero: !rows.is_empty() && rows.iter().all(|r| r.interval.0 <= 0.0 && 0.0 <= r.interval.1),
        lambda_squared: l * l,
        width_ratios,
        rows,
        failures,
    })
}

pub fn run_cascade(family: &FamilyHandle, ks: core::ops::RangeInclusive<u32>) -> Result<CascadeResult> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for k in ks {
        match cascade_row(family, k) {
            Ok(r) => rows.push(r),
            Err(error) => failures.push(KFailure { k, error }),
        }
    }
    summarize_cascade(family, rows, failures)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StripCurve {
    pub k: u32,
    /// `mu` on `L_k^{2+}` per alpha (None where continuation failed).
    pub plus: Vec<Option<f64>>,
    pub minus: Vec<Option<f64>>,
    /// Least-squares slope of `L_k^{2+}` against alpha.
    pub slope: f64,
    pub slope_minus: f64,
    /// `-lambda^k y_minus`, shared by both boundaries.
    pub predicted_slope: f64,
    /// Worse of the two relative slope errors.
    pub slope_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StripFailure {
    pub k: u32,
    pub alpha_index: usize,
    pub kind: BifurcationKind,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StripMap2D {
    pub alphas: Vec<f64>,
    pub ks: Vec<u32>,
    pub curves: Vec<StripCurve>,
    /// `intersections[a][i * ks.len() + j]`: strips `i` and `j` overlap at `alphas[a]`.
    pub intersections: Vec<Vec<bool>>,
    /// `crossings[a][i]`: strip `i` contains `mu = 0` at `alphas[a]`.
    pub crossings: Vec<Vec<bool>>,
    /// Alpha indices around 0 where every strip contains `mu = 0` and all pairs overlap.
    pub resonant_band: Vec<usize>,
    /// All strips pairwise disjoint at every alpha with `|alpha| >= disjoint_threshold`.
    pub disjoint_far: bool,
    pub disjoint_threshold: f64,
    pub failures: Vec<StripFailure>,
}

pub const ATLAS_POINTS: usize = 41;
pub const ATLAS_EPS: f64 = 0.05;

/// Uniform grid of `n` alphas on `[-eps, eps]`.
pub fn alpha_grid(eps: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if n == 1 { 0.0 } else { -eps + 2.0 * eps * i as f64 / (n - 1) as f64 }).collect()
}

/// `(mu_plus, mu_minus)` at each alpha, for one `k`.
pub type StripTrace = Vec<(Result<f64>, Result<f64>)>;

/// The template retuned to each alpha, keeping its `s0`.
pub fn atlas_families(template: &FamilyHandle, alphas: &[f64]) -> Vec<Result<FamilyHandle>> {
    alphas.iter().map(|&a| tune_to(template, a, template.s0)).collect()
}

/// Both boundaries of the strip for one `k`, continued along the alpha grid:
/// each alpha is seeded with the rescaled parameters found at the previous one.
pub fn trace_strip(families: &[Result<FamilyHandle>], k: u32) -> StripTrace {
    let mut seed = (BifurcationKind::Plus.limit_m(), BifurcationKind::Minus.limit_m());
    let mut out = Vec::with_capacity(families.len());
    for fam in families {
        let fam = match fam {
            Ok(f) => f,
            Err(e) => {
                out.push((Err(e.clone()), Err(e.clone())));
                continue;
            }
        };
        let p = locate_bifurcation_from(fam, k, BifurcationKind::Plus, seed.0)
            .or_else(|_| locate_bifurcation(fam, k, BifurcationKind::Plus));
        let m = locate_bifurcation_from(fam, k, BifurcationKind::Minus, seed.1)
            .or_else(|_| locate_bifurcation(fam, k, BifurcationKind::Minus));
        if let Ok(p) = &p {
            seed.0 = p.m;
        }
        if let Ok(m) = &m {
            seed.1 = m.m;
        }
        out.push((p.map(|b| b.mu), m.map(|b| b.mu)));
    }
    out
}

/// Assembles per-`k` traces (in the order of `ks`) into the atlas.
pub fn summarize_strips(template: &FamilyHandle, ks: &[u32], alphas: &[f64], traces: Vec<StripTrace>) -> Result<StripMap2D> {
    let nk = ks.len();
    let mut failures = Vec::new();
    let mut plus = alloc::vec![alloc::vec![None; alphas.len()]; nk];
    let mut minus = alloc::vec![alloc::vec![None; alphas.len()]; nk];
    for (i, trace) in traces.into_iter().enumerate() {
        for (a, (p, m)) in trace.into_iter().enumerate() {
            match p {
                Ok(v) => plus[i][a] = Some(v),
                Err(error) => failures.push(StripFailure { k: ks[i], alpha_index: a, kind: BifurcationKind::Plus, error }),
            }
            match m {
                Ok(v) => minus[i][a] = Some(v),
                Err(error) => failures.push(StripFailure { k: ks[i], alpha_index: a, kind: BifurcationKind::Minus, error }),
            }
        }
    }
    let l = template.local.lambda;
    let ym = template.global.y_minus;
    let mut curves = Vec::with_capacity(nk);
    let fit = |curve: &[Option<f64>]| -> Result<f64> {
        let pts: Vec<(f64, f64)> = alphas.iter().zip(curve).filter_map(|(a, v)| v.map(|v| (*a, v))).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        Ok(if pts.len() >= 2 { crate::numeric::linear_fit(&xs, &ys)?.1 } else { f64::NAN })
    };
    for (i, &k) in ks.iter().enumerate() {
        let slope = fit(&plus[i])?;
        let slope_minus = fit(&minus[i])?;
        let predicted = -lambda_pow(l, k) * ym;
        let err = |v: f64| ((v - predicted) / predicted).abs();
        curves.push(StripCurve {
            k,
            plus: plus[i].clone(),
            minus: minus[i].clone(),
            slope,
            slope_minus,
            predicted_slope: predicted,
            slope_rel_error: err(slope).max(err(slope_minus)),
        });
    }
    let strip = |i: usize, a: usize| -> Option<(f64, f64)> {
        match (plus[i][a], minus[i][a]) {
            (Some(p), Some(m)) => Some(if p < m { (p, m) } else { (m, p) }),
            _ => None,
        }
    };
    let mut intersections = Vec::with_capacity(alphas.len());
    let mut crossings = Vec::with_capacity(alphas.len());
    for a in 0..alphas.len() {
        let mut row = alloc::vec![false; nk * nk];
        let mut cross = alloc::vec![false; nk];
        for i in 0..nk {
            if let Some(si) = strip(i, a) {
                cross[i] = si.0 <= 0.0 && 0.0 <= si.1;
                for j in 0..nk {
                    if let Some(sj) = strip(j, a) {
                        row[i * nk + j] = intervals_overlap(si, sj);
                    }
                }
            }
        }
        intersections.push(row);
        crossings.push(cross);
    }
    let all_meet = |a: usize| crossings[a].iter().all(|c| *c) && intersections[a].iter().all(|c| *c);
    let mut resonant_band = Vec::new();
    if let Some(zero) = (0..alphas.len()).min_by(|&x, &y| alphas[x].abs().total_cmp(&alphas[y].abs())) {
        if all_meet(zero) {
            let mut lo = zero;
            while lo > 0 && all_meet(lo - 1) {
                lo -= 1;
            }
            let mut hi = zero;
            while hi + 1 < alphas.len() && all_meet(hi + 1) {
                hi += 1;
            }
            resonant_band.extend(lo..=hi);
        }
    }
    let threshold = 10.0 * lambda_pow(l.abs(), 8);
    let mut disjoint_far = true;
    for a in 0..alphas.len() {
        if alphas[a].abs() + 1e-12 < threshold {
            continue;
        }
        for i in 0..nk {
            for j in 0..nk {
                if i != j && (strip(i, a).is_none() || intersections[a][i * nk + j]) {
                    disjoint_far = false;
                }
            }
        }
    }
    Ok(StripMap2D {
        alphas: alphas.to_vec(),
        ks: ks.to_vec(),
        curves,
        intersections,
        crossings,
        resonant_band,
        disjoint_far,
        disjoint_threshold: threshold,
        failures,
    })
}

/// Traces `L_k^{2+}` and `L_k^{2-}` over the alpha grid.
pub fn run_strip_atlas(template: &FamilyHandle, ks: core::ops::RangeInclusive<u32>, eps: f64, n_alpha: usize) -> Result<StripMap2D> {
    let ks: Vec<u32> = ks.collect();
    let alphas = alpha_grid(eps, n_alpha);
    let families = atlas_families(template, &alphas);
    let traces = ks.iter().map(|&k| trace_strip(&families, k)).collect();
    summarize_strips(template, &ks, &alphas, traces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    /// Elliptic 2-orbit at `mu = 0` for every `k`, no degeneracy flagged.
    Certified,
    /// Elliptic orbits found but a degeneracy of the limit orbit is flagged.
    ExistenceOnly,
    NotCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Degeneracy {
    /// `s0 = -1/2`: 1:4 resonance of the limit 2-orbit.
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:4"))]
    Resonance1To4,
    /// `s0 = -3/4`: 1:3 resonance.
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:3"))]
    Resonance1To3,
    /// `s0 = -5/8`: vanishing twist of the limit 2-orbit.
    Twistless,
    /// `s0 = -1/sqrt 2`, where the certificate does not apply.
    ExcludedValue,
}

impl Degeneracy {
    pub fn s0(self) -> f64 {
        match self {
            Degeneracy::Resonance1To4 => -0.5,
            Degeneracy::Resonance1To3 => -0.75,
            Degeneracy::Twistless => -0.625,
            Degeneracy::ExcludedValue => -core::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub const ALL: [Degeneracy; 4] =
        [Degeneracy::Resonance1To4, Degeneracy::Resonance1To3, Degeneracy::Twistless, Degeneracy::ExcludedValue];
}

/// `|s0 - value|` below which a degeneracy is flagged.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// `|alpha|` above which the family is not considered globally resonant.
pub const RESONANCE_ALPHA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResonanceRow {
    pub k: u32,
    pub m: f64,
    pub orbit: Option<OrbitRecord>,
    pub error: Option<Error>,
    pub cos_phi: Option<f64>,
    pub cos_phi_error: Option<f64>,
    /// `cos_phi_error / (k |lambda|^k)`.
    pub error_constant: Option<f64>,
    /// `e_k` from the located bifurcations.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResonanceCertificate {
    pub s0: f64,
    pub alpha: f64,
    pub k_range: (u32, u32),
    /// `1 + 2 s0`.
    pub predicted_cos_phi: f64,
    pub rows: Vec<ResonanceRow>,
    /// Intervals all contain `mu = 0` and shrink into each other.
    pub nested: bool,
    pub flags: Vec<Degeneracy>,
    /// Largest `error_constant`.
    pub constant: f64,
    pub verdict: Verdict,
}

pub fn resonance_row(family: &FamilyHandle, k: u32) -> ResonanceRow {
    let predicted = 1.0 + 2.0 * family.s0;
    let lk = lambda_pow(family.local.lambda.abs(), k);
    let mut row = ResonanceRow { k, m: f64::NAN, orbit: None, error: None, cos_phi: None, cos_phi_error: None, error_constant: None, interval: None };
    let found = ReturnMap::at_mu(family, k, 0.0).and_then(RescaledMap::new).and_then(|map| {
        row.m = map.m;
        two_orbit_of(&map)
    });
    match found {
        Ok(rec) => {
            let c = 0.5 * rec.trace;
            row.cos_phi = Some(c);
            row.cos_phi_error = Some((c - predicted).abs());
            row.error_constant = Some((c - predicted).abs() / (k as f64 * lk));
            row.orbit = Some(rec);
        }
        Err(e) => row.error = Some(e),
    }
    let p = locate_bifurcation(family, k, BifurcationKind::Plus);
    let m = locate_bifurcation(family, k, BifurcationKind::Minus);
    if let (Ok(p), Ok(m)) = (p, m) {
        row.interval = Some(if p.mu < m.mu { (p.mu, m.mu) } else { (m.mu, p.mu) });
    }
    row
}

fn check_resonant(family: &FamilyHandle) -> Result<()> {
    let s0 = family.s0;
    if !(s0 > -1.0 && s0 < 0.0) {
        return Err(Error::NotInResonanceWindow { s0 });
    }
    if family.alpha.abs() > RESONANCE_ALPHA_TOL {
        return Err(Error::NotAtResonance { alpha: family.alpha });
    }
    Ok(())
}

pub fn summarize_resonance(family: &FamilyHandle, ks: (u32, u32), mut rows: Vec<ResonanceRow>) -> ResonanceCertificate {
    rows.sort_by_key(|r| r.k);
    let flags: Vec<Degeneracy> = Degeneracy::ALL.into_iter().filter(|d| (family.s0 - d.s0()).abs() <= DEGENERACY_TOL).collect();
    let all_elliptic = !rows.is_empty() && rows.iter().all(|r| r.orbit.as_ref().is_some_and(|o| o.is_elliptic()));
    let contains = |r: &ResonanceRow| r.interval.is_some_and(|(lo, hi)| lo <= 0.0 && 0.0 <= hi);
    let nested = rows.iter().all(contains)
        && rows.windows(2).all(|w| match (w[0].interval, w[1].interval) {
            (Some(a), Some(b)) => a.0 <= b.0 && b.1 <= a.1,
            _ => false,
        });
    let verdict = if !all_elliptic {
        Verdict::NotCertified
    } else if flags.is_empty() {
        Verdict::Certified
    } else {
        Verdict::ExistenceOnly
    };
    ResonanceCertificate {
        s0: family.s0,
        alpha: family.alpha,
        k_range: ks,
        predicted_cos_phi: 1.0 + 2.0 * family.s0,
        constant: rows.iter().filter_map(|r| r.error_constant).fold(0.0, f64::max),
        rows,
        nested,
        flags,
        verdict,
    }
}

/// Checks, for each `k`, that `T_k` at `mu = 0` has an elliptic 2-orbit with
/// `cos(phi)` close to `1 + 2 s0`.
pub fn certify_global_resonance(family: &FamilyHandle, ks: core::ops::RangeInclusive<u32>) -> Result<ResonanceCertificate> {
    check_resonant(family)?;
    let range = (*ks.start(), *ks.end());
    let rows = ks.map(|k| resonance_row(family, k)).collect();
    Ok(summarize_resonance(family, range, rows))
}

pub fn validate_resonance_family(family: &FamilyHandle) -> Result<()> {
    check_resonant(family)
}
