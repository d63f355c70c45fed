//! Fixed points and 2-periodic orbits of `T_k`, and the bifurcation values
//! `mu_k^{2+}` (fixed point with multipliers `+1, -1`) and `mu_k^{2-}`
//! (2-orbit with a double `-1`).
//!
//! Newton iterations run in the rescaled coordinates of [`crate::rescale`],
//! where the Jacobians are `O(1)`; points are reported in both systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::family::FamilyHandle;
use crate::henon::{fixed_points, two_periodic_orbit, HenonParam, StabilityClass, TRACE_TOL};
use crate::map::{Jacobian2, Multipliers, PlanarPoint};
use crate::math;
use crate::numeric::{brent, solve};
use crate::rescale::{mu_from_m, RescaledMap};
use crate::return_map::ReturnMap;
use crate::{Error, Result};

/// Newton stops once the residual is below this.
pub const NEWTON_TOL: f64 = 1e-13;
/// Residual (rescaled coordinates) a converged orbit must reach.
pub const ACCEPT_TOL: f64 = 1e-10;
pub const MAX_NEWTON_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OrbitKind {
    /// Fixed point of `T_k`: a single-round orbit of period `k + n0`.
    SingleRound,
    /// 2-periodic point of `T_k`: a double-round orbit of period `2(k + n0)`.
    DoubleRound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitRecord {
    pub kind: OrbitKind,
    pub k: u32,
    /// Period as an orbit of the full map.
    pub period: u32,
    /// Points in the original coordinates.
    pub points: Vec<PlanarPoint>,
    /// Same points in rescaled coordinates.
    pub rescaled: Vec<PlanarPoint>,
    pub multipliers: Multipliers,
    pub trace: f64,
    pub det: f64,
    pub stability: StabilityClass,
    /// `|T_k^n(Z) - Z|` in rescaled coordinates.
    pub residual: f64,
    pub mu: f64,
    pub m: f64,
}

impl OrbitRecord {
    pub fn is_elliptic(&self) -> bool {
        self.stability.is_elliptic()
    }
}

fn newton<G>(mut g: G, z0: PlanarPoint) -> Result<(PlanarPoint, f64)>
where
    G: FnMut(PlanarPoint) -> Result<(PlanarPoint, Jacobian2)>,
{
    let mut z = z0;
    let (mut f, mut j) = g(z)?;
    let mut r = f.norm_inf();
    for _ in 0..MAX_NEWTON_STEPS {
        if r <= NEWTON_TOL {
            break;
        }
        if j.det().abs() < 1e-12 * j.max_abs().max(1.0) * j.max_abs().max(1.0) {
            return Err(Error::SingularJacobian);
        }
        let step = j.inverse()?.apply(PlanarPoint::new(-f.x, -f.y));
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = PlanarPoint::new(z.x + t * step.x, z.y + t * step.y);
            if let Ok((ft, jt)) = g(trial) {
                let rt = ft.norm_inf();
                if rt.is_finite() && rt < (1.0 - 1e-4 * t) * r {
                    z = trial;
                    f = ft;
                    j = jt;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r <= ACCEPT_TOL {
        Ok((z, r))
    } else {
        Err(Error::NewtonDiverged)
    }
}

fn minus_identity(j: Jacobian2) -> Jacobian2 {
    Jacobian2::new(j.a - 1.0, j.b, j.c, j.d - 1.0)
}

fn record(map: &RescaledMap<'_>, kind: OrbitKind, pts: Vec<PlanarPoint>, j: Jacobian2, residual: f64) -> Result<OrbitRecord> {
    let n0 = map.rm.family.global.n0;
    let k = map.rm.k;
    let originals = pts.iter().map(|&z| map.to_original(z)).collect::<Result<Vec<_>>>()?;
    Ok(OrbitRecord {
        kind,
        k,
        period: match kind {
            OrbitKind::SingleRound => k + n0,
            OrbitKind::DoubleRound => 2 * (k + n0),
        },
        points: originals,
        rescaled: pts,
        multipliers: j.multipliers(),
        trace: j.trace(),
        det: j.det(),
        stability: StabilityClass::from_trace(j.trace(), j.det(), TRACE_TOL),
        residual,
        mu: map.rm.mu,
        m: map.m,
    })
}

/// Fixed point of the rescaled map from a rescaled seed.
pub fn find_fixed_point_rescaled(map: &RescaledMap<'_>, seed: PlanarPoint) -> Result<OrbitRecord> {
    let (z, r) = newton(
        |z| {
            let (w, j) = map.eval_with_jacobian(z)?;
            Ok((PlanarPoint::new(w.x - z.x, w.y - z.y), minus_identity(j)))
        },
        seed,
    )?;
    let (_, j) = map.eval_with_jacobian(z)?;
    record(map, OrbitKind::SingleRound, vec![z], j, r)
}

/// Fixed point of `T_k` from a seed in the original coordinates.
pub fn find_fixed_point(rm: &ReturnMap<'_>, seed: PlanarPoint) -> Result<OrbitRecord> {
    let map = RescaledMap::new(*rm)?;
    find_fixed_point_rescaled(&map, map.from_original(seed)?)
}

fn two_step(map: &RescaledMap<'_>, z: PlanarPoint) -> Result<(PlanarPoint, PlanarPoint, Jacobian2)> {
    let (z1, j0) = map.eval_with_jacobian(z)?;
    let (z2, j1) = map.eval_with_jacobian(z1)?;
    Ok((z1, z2, j1 * j0))
}

/// Distance below which the two points of a 2-orbit are taken to coincide.
pub const COLLAPSE_TOL: f64 = 1e-6;

pub fn find_two_periodic_rescaled(map: &RescaledMap<'_>, seed: PlanarPoint) -> Result<OrbitRecord> {
    let (z, r) = newton(
        |z| {
            let (_, z2, j) = two_step(map, z)?;
            Ok((PlanarPoint::new(z2.x - z.x, z2.y - z.y), minus_identity(j)))
        },
        seed,
    )?;
    let (z1, _, j) = two_step(map, z)?;
    if z.dist(z1) < COLLAPSE_TOL {
        return Err(Error::CollapsedToFixedPoint);
    }
    record(map, OrbitKind::DoubleRound, vec![z, z1], j, r)
}

pub fn find_two_periodic(rm: &ReturnMap<'_>, seed: PlanarPoint) -> Result<OrbitRecord> {
    let map = RescaledMap::new(*rm)?;
    find_two_periodic_rescaled(&map, map.from_original(seed)?)
}

/// All fixed points reachable from the limit-map predictions, plus a coarse
/// seed grid on `[-2, 2]^2`. Duplicates are merged, sorted by `Y`.
pub fn fixed_points_of(map: &RescaledMap<'_>) -> Vec<OrbitRecord> {
    let mut seeds: Vec<PlanarPoint> = fixed_points(HenonParam(map.m)).iter().map(|f| f.point).collect();
    seeds.extend(crate::rescale::grid(5, 2.0));
    let mut out: Vec<OrbitRecord> = Vec::new();
    for s in seeds {
        if let Ok(rec) = find_fixed_point_rescaled(map, s) {
            let z = rec.rescaled[0];
            if z.norm_inf() <= 4.0 && out.iter().all(|o| o.rescaled[0].dist(z) > 1e-7) {
                out.push(rec);
            }
        }
    }
    out.sort_by(|a, b| a.rescaled[0].y.total_cmp(&b.rescaled[0].y));
    out
}

/// The 2-orbit continued from the limit prediction at `map.m`.
pub fn two_orbit_of(map: &RescaledMap<'_>) -> Result<OrbitRecord> {
    let seed = two_periodic_orbit(HenonParam(map.m))?.p1;
    find_two_periodic_rescaled(map, seed)
}

/// 2-orbit of the rescaled `T_k` at parameter `m`, optionally seeded.
pub fn two_orbit_at_m(family: &FamilyHandle, k: u32, m: f64, seed: Option<PlanarPoint>) -> Result<OrbitRecord> {
    let map = RescaledMap::at_m(family, k, m)?;
    match seed {
        Some(s) => find_two_periodic_rescaled(&map, s).or_else(|_| two_orbit_of(&map)),
        None => two_orbit_of(&map),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BifurcationKind {
    /// Fixed point with multipliers `+1, -1`; `M = 0` in the limit.
    Plus,
    /// 2-orbit with a double `-1`; `M = 1` in the limit.
    Minus,
}

impl BifurcationKind {
    pub fn limit_m(self) -> f64 {
        match self {
            BifurcationKind::Plus => 0.0,
            BifurcationKind::Minus => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub k: u32,
    pub mu: f64,
    /// Rescaled parameter at `mu`.
    pub m: f64,
    /// `mu_from_m` at the limit value of `M` (0 or 1).
    pub predicted_mu: f64,
    /// Trace condition at the returned point (`tr` or `tr + 2`).
    pub trace_residual: f64,
    pub orbit: OrbitRecord,
}

/// Bordered Newton on `(X, Y, M)` for `T_k(Z) = Z`, `tr DT_k(Z) = 0`.
fn locate_plus(family: &FamilyHandle, k: u32, m_seed: f64) -> Result<BifurcationPoint> {
    let eval = |v: [f64; 3]| -> Result<([f64; 3], Jacobian2)> {
        let map = RescaledMap::at_m(family, k, v[2])?;
        let z = PlanarPoint::new(v[0], v[1]);
        let (w, j) = map.eval_with_jacobian(z)?;
        Ok(([w.x - z.x, w.y - z.y, j.trace()], j))
    };
    let mut v = [0.0, 0.0, m_seed];
    let mut res = eval(v)?.0;
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let h = 1e-6;
    for _ in 0..MAX_NEWTON_STEPS {
        if norm(&res) <= NEWTON_TOL {
            break;
        }
        let (_, j) = eval(v)?;
        let mut a = [0.0; 9];
        a[0] = j.a - 1.0;
        a[1] = j.b;
        a[3] = j.c;
        a[4] = j.d - 1.0;
        // Trace row and M column by central differences.
        for c in 0..3 {
            let mut vp = v;
            let mut vm = v;
            vp[c] += h;
            vm[c] -= h;
            let (rp, _) = eval(vp)?;
            let (rm, _) = eval(vm)?;
            a[6 + c] = (rp[2] - rm[2]) / (2.0 * h);
            if c == 2 {
                a[2] = (rp[0] - rm[0]) / (2.0 * h);
                a[5] = (rp[1] - rm[1]) / (2.0 * h);
            }
        }
        let step = solve(&a, &[-res[0], -res[1], -res[2]])?;
        let mut t = 1.0;
        let mut accepted = false;
        let r0 = norm(&res);
        for _ in 0..30 {
            let trial = [v[0] + t * step[0], v[1] + t * step[1], v[2] + t * step[2]];
            if let Ok((rt, _)) = eval(trial) {
                if norm(&rt) < (1.0 - 1e-4 * t) * r0 {
                    v = trial;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(&res) > ACCEPT_TOL {
        return Err(Error::NewtonDiverged);
    }
    let map = RescaledMap::at_m(family, k, v[2])?;
    let z = PlanarPoint::new(v[0], v[1]);
    let (_, j) = map.eval_with_jacobian(z)?;
    let orbit = record(&map, OrbitKind::SingleRound, vec![z], j, res[0].abs().max(res[1].abs()))?;
    Ok(BifurcationPoint {
        kind: BifurcationKind::Plus,
        k,
        mu: map.rm.mu,
        m: v[2],
        predicted_mu: mu_from_m(family, k, 0.0),
        trace_residual: res[2],
        orbit,
    })
}

/// Bracket in `M` searched for the double `-1` of the 2-orbit.
pub const MINUS_BRACKET: (f64, f64) = (0.6, 1.4);

fn locate_minus(family: &FamilyHandle, k: u32, m_seed: f64) -> Result<BifurcationPoint> {
    let f = |m: f64| -> Result<f64> { Ok(two_orbit_at_m(family, k, m, None)?.trace + 2.0) };
    let half = 0.5 * (MINUS_BRACKET.1 - MINUS_BRACKET.0);
    let (lo, hi) = ((m_seed - half).max(0.05), m_seed + half);
    let m = brent(f, lo, hi, 1e-13, 200)?;
    let orbit = two_orbit_at_m(family, k, m, None)?;
    Ok(BifurcationPoint {
        kind: BifurcationKind::Minus,
        k,
        mu: orbit.mu,
        m,
        predicted_mu: mu_from_m(family, k, 1.0),
        trace_residual: orbit.trace + 2.0,
        orbit,
    })
}

/// Seeded at the limit value of `M` (0 or 1).
pub fn locate_bifurcation(family: &FamilyHandle, k: u32, kind: BifurcationKind) -> Result<BifurcationPoint> {
    locate_bifurcation_from(family, k, kind, kind.limit_m())
}

/// As [`locate_bifurcation`], seeded at `m_seed` (used for continuation).
pub fn locate_bifurcation_from(family: &FamilyHandle, k: u32, kind: BifurcationKind, m_seed: f64) -> Result<BifurcationPoint> {
    match kind {
        BifurcationKind::Plus => locate_plus(family, k, m_seed),
        BifurcationKind::Minus => locate_minus(family, k, m_seed),
    }
}

/// `phi = arccos(tr / 2)` of a 2-orbit record.
pub fn phase_of_elliptic(rec: &OrbitRecord) -> Result<f64> {
    if rec.kind != OrbitKind::DoubleRound || !(rec.trace.abs() < 2.0) || rec.det <= 0.0 {
        return Err(Error::NotElliptic { trace: rec.trace });
    }
    Ok(math::acos(0.5 * rec.trace))
}
