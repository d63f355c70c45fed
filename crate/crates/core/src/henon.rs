//! The conservative non-orientable Hénon map `x' = y, y' = M + x - y^2`.
//!
//! Fixed points, the 2-periodic orbit, its first twist coefficient and an
//! interval-arithmetic horseshoe certificate. The first-return maps near the
//! tangency converge to this map after rescaling, so these are the reference
//! values for everything downstream.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::interval::Interval;
use crate::map::{Jacobian2, Multipliers, PlanarPoint};
use crate::math;
use crate::numeric::brent;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HenonParam(pub f64);

pub fn henon(m: f64, p: PlanarPoint) -> PlanarPoint {
    PlanarPoint::new(p.y, m + p.x - p.y * p.y)
}

pub fn henon_jacobian(p: PlanarPoint) -> Jacobian2 {
    Jacobian2::new(0.0, 1.0, 1.0, -2.0 * p.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StabilityTag {
    Saddle,
    EllipticGeneric,
    /// Multipliers `+1, -1` (determinant -1) or a double `+1`.
    ParabolicPlus,
    /// Double multiplier `-1`.
    ParabolicMinus,
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:4"))]
    Resonance1To4,
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:3"))]
    Resonance1To3,
    /// `cos(phi) = -1/4`, where the twist of the limit 2-orbit vanishes.
    Twistless,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityClass {
    pub tag: StabilityTag,
    /// Rotation angle in `(0, pi)` for elliptic classes.
    pub phase: Option<f64>,
}

/// Default tolerance on traces when tagging parabolic and resonant cases.
pub const TRACE_TOL: f64 = 1e-9;

impl StabilityClass {
    /// Classifies a periodic point from the trace and determinant of its
    /// return derivative.
    pub fn from_trace(trace: f64, det: f64, tol: f64) -> Self {
        let tag = if det < 0.0 {
            if trace.abs() <= tol {
                StabilityTag::ParabolicPlus
            } else {
                StabilityTag::Saddle
            }
        } else if (trace - 2.0).abs() <= tol {
            StabilityTag::ParabolicPlus
        } else if (trace + 2.0).abs() <= tol {
            StabilityTag::ParabolicMinus
        } else if trace.abs() > 2.0 {
            StabilityTag::Saddle
        } else if trace.abs() <= tol {
            StabilityTag::Resonance1To4
        } else if (trace + 1.0).abs() <= tol {
            StabilityTag::Resonance1To3
        } else if (trace + 0.5).abs() <= tol {
            StabilityTag::Twistless
        } else {
            StabilityTag::EllipticGeneric
        };
        let phase = if det > 0.0 && trace.abs() < 2.0 { Some(math::acos(0.5 * trace)) } else { None };
        Self { tag, phase }
    }

    pub fn is_elliptic(&self) -> bool {
        self.phase.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPoint {
    pub point: PlanarPoint,
    pub multipliers: Multipliers,
}

pub fn fixed_points(m: HenonParam) -> Vec<FixedPoint> {
    let m = m.0;
    if m < 0.0 || !m.is_finite() {
        return Vec::new();
    }
    let s = math::sqrt(m);
    let pts: Vec<f64> = if m == 0.0 { vec![0.0] } else { vec![-s, s] };
    pts.into_iter()
        .map(|v| {
            let p = PlanarPoint::new(v, v);
            FixedPoint { point: p, multipliers: henon_jacobian(p).multipliers() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoCycle {
    pub p1: PlanarPoint,
    pub p2: PlanarPoint,
    pub trace: f64,
    pub class: StabilityClass,
}

/// The 2-orbit `{(-sqrt M, sqrt M), (sqrt M, -sqrt M)}`.
pub fn two_periodic_orbit(m: HenonParam) -> Result<TwoCycle> {
    let m = m.0;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::NoRealOrbit { m });
    }
    let s = math::sqrt(m);
    let p1 = PlanarPoint::new(-s, s);
    let p2 = PlanarPoint::new(s, -s);
    let j = henon_jacobian(p2) * henon_jacobian(p1);
    let trace = j.trace();
    let class = StabilityClass::from_trace(trace, j.det(), TRACE_TOL);
    Ok(TwoCycle { p1, p2, trace, class })
}

/// Truncated bivariate Taylor polynomial through total degree 3.
///
/// Index layout: `1, u, v, u^2, uv, v^2, u^3, u^2 v, u v^2, v^3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet3(pub [f64; 10]);

const JET_EXP: [(usize, usize); 10] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

fn jet_index(i: usize, j: usize) -> Option<usize> {
    JET_EXP.iter().position(|&e| e == (i, j))
}

impl Jet3 {
    pub fn constant(c: f64) -> Self {
        let mut j = Self::default();
        j.0[0] = c;
        j
    }

    pub fn var_u(c: f64) -> Self {
        let mut j = Self::constant(c);
        j.0[1] = 1.0;
        j
    }

    pub fn var_v(c: f64) -> Self {
        let mut j = Self::constant(c);
        j.0[2] = 1.0;
        j
    }

    /// Coefficient of `u^i v^j`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        jet_index(i, j).map(|k| self.0[k]).unwrap_or(0.0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for (a, b) in r.0.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        for (a, b) in r.0.iter_mut().zip(o.0.iter()) {
            *a -= b;
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::default();
        for (ka, &(ia, ja)) in JET_EXP.iter().enumerate() {
            if self.0[ka] == 0.0 {
                continue;
            }
            for (kb, &(ib, jb)) in JET_EXP.iter().enumerate() {
                if let Some(k) = jet_index(ia + ib, ja + jb) {
                    r.0[k] += self.0[ka] * o.0[kb];
                }
            }
        }
        r
    }
}

/// Taylor jets at `p1` of the second iterate, as displacements from `p1`.
pub fn second_iterate_jets(m: f64) -> Result<(Jet3, Jet3)> {
    let cyc = two_periodic_orbit(HenonParam(m))?;
    let step = |x: Jet3, y: Jet3| (y, Jet3::constant(m).add(&x).sub(&y.mul(&y)));
    let (x1, y1) = step(Jet3::var_u(cyc.p1.x), Jet3::var_v(cyc.p1.y));
    let (x2, y2) = step(x1, y1);
    Ok((x2.sub(&Jet3::constant(cyc.p1.x)), y2.sub(&Jet3::constant(cyc.p1.y))))
}

/// First twist coefficient of an elliptic fixed point with multiplier
/// `e^{i theta}`, from the Taylor jets of an orientation-preserving area
/// preserving map at that point.
///
/// With `A q = mu q`, `A^T p = conj(mu) p`, `<p, q> = 1` and the quadratic and
/// cubic forms `B`, `C` of the jets, the cubic resonant coefficient is
///
/// ```text
/// c1 = g20 g11 (conj(mu) - 3 + 2 mu) / (2 (mu^2 - mu)(conj(mu) - 1))
///    + |g11|^2 / (1 - conj(mu)) + |g02|^2 / (2 (mu^2 - conj(mu))) + g21 / 2
/// ```
///
/// and the twist is `Im(conj(mu) c1)` (the real part vanishes for conservative
/// maps). Returns `(twist, real_part)`.
pub fn twist_from_jets(fx: &Jet3, fy: &Jet3) -> Result<(f64, f64)> {
    let a = Jacobian2::new(fx.coeff(1, 0), fx.coeff(0, 1), fy.coeff(1, 0), fy.coeff(0, 1));
    let tr = a.trace();
    if !(tr.abs() < 2.0) {
        return Err(Error::NotElliptic { trace: tr });
    }
    let mu = Complex64::new(0.5 * tr, math::sqrt(1.0 - 0.25 * tr * tr));
    let mub = mu.conj();
    let q = if a.b.abs() >= a.c.abs() {
        [Complex64::new(a.b, 0.0), mu - a.a]
    } else {
        [mu - a.d, Complex64::new(a.c, 0.0)]
    };
    let p0 = if a.c.abs() >= a.b.abs() {
        [Complex64::new(a.c, 0.0), mub - a.a]
    } else {
        [mub - a.d, Complex64::new(a.b, 0.0)]
    };
    let s = p0[0].conj() * q[0] + p0[1].conj() * q[1];
    let t = Complex64::new(1.0, 0.0) / s.conj();
    let p = [p0[0] * t, p0[1] * t];

    let bform = |f: &Jet3, x: [Complex64; 2], y: [Complex64; 2]| {
        x[0] * y[0] * (2.0 * f.coeff(2, 0))
            + (x[0] * y[1] + x[1] * y[0]) * f.coeff(1, 1)
            + x[1] * y[1] * (2.0 * f.coeff(0, 2))
    };
    let cform = |f: &Jet3, x: [Complex64; 2], y: [Complex64; 2], z: [Complex64; 2]| {
        x[0] * y[0] * z[0] * (6.0 * f.coeff(3, 0))
            + (x[0] * y[0] * z[1] + x[0] * y[1] * z[0] + x[1] * y[0] * z[0]) * (2.0 * f.coeff(2, 1))
            + (x[0] * y[1] * z[1] + x[1] * y[0] * z[1] + x[1] * y[1] * z[0]) * (2.0 * f.coeff(1, 2))
            + x[1] * y[1] * z[1] * (6.0 * f.coeff(0, 3))
    };
    let qb = [q[0].conj(), q[1].conj()];
    let pair = |x: [Complex64; 2], y: [Complex64; 2]| p[0].conj() * bform(fx, x, y) + p[1].conj() * bform(fy, x, y);
    let g20 = pair(q, q);
    let g11 = pair(q, qb);
    let g02 = pair(qb, qb);
    let g21 = p[0].conj() * cform(fx, q, q, qb) + p[1].conj() * cform(fy, q, q, qb);

    let one = Complex64::new(1.0, 0.0);
    let c1 = g20 * g11 * (mub - 3.0 + 2.0 * mu) / (2.0 * (mu * mu - mu) * (mub - one))
        + Complex64::new(g11.norm_sqr(), 0.0) / (one - mub)
        + Complex64::new(g02.norm_sqr(), 0.0) / (2.0 * (mu * mu - mub))
        + g21 / 2.0;
    let w = mub * c1;
    Ok((w.im, w.re))
}

/// Distance below which `M` counts as sitting on a strong resonance.
pub const RESONANCE_GUARD: f64 = 1e-9;

/// First Birkhoff (twist) coefficient of the elliptic 2-orbit, computed on the
/// second iterate at `p1`. Negative on `(0, 5/8)`, positive on `(5/8, 1)`.
pub fn birkhoff_b1(m: HenonParam) -> Result<f64> {
    let m = m.0;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidParameter("twist coefficient needs 0 < M < 1"));
    }
    if (m - 0.5).abs() < RESONANCE_GUARD || (m - 0.75).abs() < RESONANCE_GUARD {
        return Err(Error::Resonant { m });
    }
    let (fx, fy) = second_iterate_jets(m)?;
    Ok(twist_from_jets(&fx, &fy)?.0)
}

/// Horseshoe certificate by covering relations.
///
/// Two rectangles `N_i = [-R, R] x Y_i` with `Y_1 = [-R, -r]`, `Y_2 = [r, R]`.
/// The map sends `x` to `y`, so images stay inside `[-R, R]` horizontally, and
/// on the edges `|y| = r` and `|y| = R` the new `y` is enclosed by interval
/// evaluation. If every `|y| = r` edge lands strictly above `R` and every
/// `|y| = R` edge strictly below `-R`, each `N_i` covers both rectangles and the
/// invariant set carries a full 2-shift.
pub fn horseshoe_certificate(m: HenonParam) -> bool {
    horseshoe_rectangles(m).is_some()
}

/// The `(R, r)` pair that certified, if any.
pub fn horseshoe_rectangles(m: HenonParam) -> Option<(f64, f64)> {
    let m = m.0;
    if !m.is_finite() || m <= 0.0 {
        return None;
    }
    let r_min = 1.0 + math::sqrt(1.0 + m);
    for i in 1..=40 {
        let big = r_min * (1.0 + 0.005 * i as f64);
        let room = m - 2.0 * big;
        if room <= 0.0 {
            break;
        }
        let small = 0.5 * math::sqrt(room);
        if verify_cover(m, big, small) {
            return Some((big, small));
        }
    }
    None
}

fn verify_cover(m: f64, big: f64, small: f64) -> bool {
    let xs = Interval::new(-big, big);
    let mi = Interval::point(m);
    let top = Interval::point(big);
    let edge_image = |y: f64| mi + xs - Interval::point(y).sqr();
    for y in [small, -small] {
        if !(edge_image(y).lo > top.hi) {
            return false;
        }
    }
    for y in [big, -big] {
        if !(edge_image(y).hi < -top.hi) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum HenonEvent {
    /// Fixed point with multipliers `+1, -1`.
    FixedPointBirth,
    PeriodDoubling,
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:4"))]
    Resonance1To4,
    #[cfg_attr(feature = "serde", serde(rename = "resonance-1:3"))]
    Resonance1To3,
    Twistless,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HenonBifurcation {
    pub m: f64,
    pub event: HenonEvent,
    /// Value of the defining condition at the returned `m`.
    pub residual: f64,
}

fn two_orbit_trace(m: f64) -> Result<f64> {
    Ok(two_periodic_orbit(HenonParam(m))?.trace)
}

/// Bifurcation values of the limit map, each found by root finding on its
/// defining condition.
pub fn bifurcation_values() -> Result<Vec<HenonBifurcation>> {
    let mut out = Vec::new();

    // Fixed point (y, y) with y^2 = M and trace -2y = 0: Newton on (y, M).
    let (mut y, mut m): (f64, f64) = (0.3, 0.2);
    for _ in 0..50 {
        let (r1, r2) = (y * y - m, -2.0 * y);
        if r1.abs().max(r2.abs()) < 1e-15 {
            break;
        }
        // [[2y, -1], [-2, 0]] (dy, dm) = -(r1, r2)
        let dy = r2 / 2.0;
        let dm = 2.0 * y * dy + r1;
        y += dy;
        m += dm;
    }
    out.push(HenonBifurcation { m, event: HenonEvent::FixedPointBirth, residual: (y * y - m).abs().max(2.0 * y.abs()) });

    let tol = 1e-14;
    let pd = brent(|m| Ok(two_orbit_trace(m)? + 2.0), 0.5, 1.5, tol, 200)?;
    out.push(HenonBifurcation { m: pd, event: HenonEvent::PeriodDoubling, residual: two_orbit_trace(pd)? + 2.0 });
    let r4 = brent(two_orbit_trace, 0.1, 0.9, tol, 200)?;
    out.push(HenonBifurcation { m: r4, event: HenonEvent::Resonance1To4, residual: two_orbit_trace(r4)? });
    let r3 = brent(|m| Ok(two_orbit_trace(m)? + 1.0), 0.6, 0.9, tol, 200)?;
    out.push(HenonBifurcation { m: r3, event: HenonEvent::Resonance1To3, residual: two_orbit_trace(r3)? + 1.0 });
    let tw = brent(|m| birkhoff_b1(HenonParam(m)), 0.55, 0.7, 1e-13, 200)?;
    out.push(HenonBifurcation { m: tw, event: HenonEvent::Twistless, residual: birkhoff_b1(HenonParam(tw))? });
    Ok(out)
}

/// `phi = arccos(1 - 2M)`, the rotation angle of the 2-orbit.
pub fn two_orbit_phase(m: f64) -> Option<f64> {
    if m > 0.0 && m < 1.0 {
        Some(math::acos(1.0 - 2.0 * m))
    } else {
        None
    }
}

/// Horseshoe threshold `5 + 2 sqrt 5` above which the limit map is known to
/// be a full horseshoe.
pub fn horseshoe_threshold() -> f64 {
    5.0 + 2.0 * math::sqrt(5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn fixed_point_cases() {
        assert!(fixed_points(HenonParam(-1.0)).is_empty());
        let f0 = fixed_points(HenonParam(0.0));
        assert_eq!(f0.len(), 1);
        assert_eq!(f0[0].multipliers, Multipliers::Real { first: 1.0, second: -1.0 });
        let f = fixed_points(HenonParam(0.25));
        assert_eq!(f[0].point, PlanarPoint::new(-0.5, -0.5));
        assert_eq!(f[1].point, PlanarPoint::new(0.5, 0.5));
    }

    #[test]
    fn two_orbit_quarter() {
        let c = two_periodic_orbit(HenonParam(0.25)).unwrap();
        assert_eq!(c.p1, PlanarPoint::new(-0.5, 0.5));
        assert!((c.trace - 1.0).abs() < 1e-15);
        assert!((c.class.phase.unwrap() - PI / 3.0).abs() < 1e-14);
        assert_eq!(two_periodic_orbit(HenonParam(0.5)).unwrap().class.tag, StabilityTag::Resonance1To4);
        assert_eq!(two_periodic_orbit(HenonParam(1.0)).unwrap().class.tag, StabilityTag::ParabolicMinus);
        assert!(matches!(two_periodic_orbit(HenonParam(0.0)), Err(Error::NoRealOrbit { .. })));
    }

    #[test]
    fn jets_match_direct_evaluation() {
        let m = 0.4;
        let (fx, fy) = second_iterate_jets(m).unwrap();
        let p1 = two_periodic_orbit(HenonParam(m)).unwrap().p1;
        let (u, v) = (1e-3, -2e-3);
        let q = henon(m, henon(m, PlanarPoint::new(p1.x + u, p1.y + v)));
        let ev = |j: &Jet3| JET_EXP.iter().enumerate().map(|(k, &(i, e))| j.0[k] * math::powi(u, i as i32) * math::powi(v, e as i32)).sum::<f64>();
        // H^2 is a polynomial of degree 4, so the cubic jet is off by O(|d|^4).
        assert!((ev(&fx) - (q.x - p1.x)).abs() < 1e-10);
        assert!((ev(&fy) - (q.y - p1.y)).abs() < 1e-10);
    }

    #[test]
    fn twist_values() {
        assert!(birkhoff_b1(HenonParam(0.625)).unwrap().abs() < 1e-6);
        assert!(birkhoff_b1(HenonParam(0.6)).unwrap() < 0.0);
        assert!(birkhoff_b1(HenonParam(0.65)).unwrap() > 0.0);
        assert!(matches!(birkhoff_b1(HenonParam(0.5)), Err(Error::Resonant { .. })));
        assert!(matches!(birkhoff_b1(HenonParam(0.75)), Err(Error::Resonant { .. })));
    }

    #[test]
    fn certificate_samples() {
        assert!(horseshoe_certificate(HenonParam(10.0)));
        assert!(!horseshoe_certificate(HenonParam(0.5)));
        assert!(!horseshoe_certificate(HenonParam(-1.0)));
    }
}
