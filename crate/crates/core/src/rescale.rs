//! Linear rescaling of `T_k` to the Hénon form
//! `X' = Y, Y' = M + X - Y^2 + (f03 / d^2) lambda^k Y^3`.
//!
//! The chain works on cross coordinates `(x0, y_k)` (see [`crate::return_map`])
//! and consists of
//!
//! 1. a shift removing the constant of the first component,
//!    `xi = x0 - x_plus - lambda^k a x_plus`, `eta = y_k - y_minus`;
//! 2. the scaling `xi = -b lambda^k u / D`, `eta = -lambda^k v / D` with
//!    `D = d + lambda^k f12 x_plus`;
//! 3. a shift by `f11 x_plus / 2` in both `u` and `v`;
//! 4. the mixing `x = u + nu1 v`, `y = v - nu2 u` with
//!    `nu1 = -(e02 / (b d)) lambda^k`, `nu2 = -nu1 - a lambda^k`;
//! 5. a final centring `X = x - a lambda^k / 2 - nu1 M3`, `Y = y - a lambda^k / 2`.
//!
//! All coefficients are the zero-order ones. The residual against the limit
//! map is then `O(lambda^k)` for generic families; the next-order linear
//! corrections are not known in closed form, so [`normalize`] measures them by
//! a seven-parameter least-squares fit (an affine change of `(X, Y)` plus a
//! shift of `M`), after which the remainder is `O(k lambda^(2k))`.

use alloc::vec::Vec;

use crate::family::FamilyHandle;
use crate::henon::henon;
use crate::map::{Jacobian2, PlanarPoint};
use crate::math;
use crate::numeric::{lstsq, theil_sen, two_sum};
use crate::return_map::ReturnMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RescaledParam {
    pub m: f64,
    /// `(f03 / d^2) lambda^k`.
    pub correction_cubic: f64,
}

fn lambda_k(family: &FamilyHandle, k: u32) -> f64 {
    let l = family.local.lambda;
    let mag = math::exp(k as f64 * math::ln(l.abs()));
    if l < 0.0 && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// `lambda^k (c x_plus - y_minus)(1 + k beta_1 lambda^k x_plus y_minus)`.
fn offset_term(family: &FamilyHandle, k: u32) -> f64 {
    let g = &family.global;
    let t = &family.taylor;
    let lk = lambda_k(family, k);
    lk * (t.c * g.x_plus - g.y_minus) * (1.0 + k as f64 * family.local.beta1() * lk * g.x_plus * g.y_minus)
}

pub fn cubic_correction(family: &FamilyHandle, k: u32) -> f64 {
    let t = &family.taylor;
    t.f03 / (t.d * t.d) * lambda_k(family, k)
}

/// `M = -d lambda^(-2k) (mu + lambda^k (c x_plus - y_minus)(1 + k beta_1 lambda^k x_plus y_minus)) - s0`.
pub fn m_from_mu(family: &FamilyHandle, k: u32, mu: f64) -> Result<RescaledParam> {
    let term = offset_term(family, k);
    let (s, e) = two_sum(mu, term);
    if term != 0.0 && s.abs() < 1e3 * f64::EPSILON * term.abs() {
        return Err(Error::PrecisionFloor { k });
    }
    let lk = lambda_k(family, k);
    let scale = -family.taylor.d / (lk * lk);
    Ok(RescaledParam { m: scale * s + scale * e - family.s0, correction_cubic: cubic_correction(family, k) })
}

/// Inverse of [`m_from_mu`].
pub fn mu_from_m(family: &FamilyHandle, k: u32, m: f64) -> f64 {
    let lk = lambda_k(family, k);
    -offset_term(family, k) - (m + family.s0) * lk * lk / family.taylor.d
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RescaleChain {
    pub k: u32,
    pub lambda_k: f64,
    /// `lambda^k a x_plus`, removed from `x0 - x_plus`.
    pub shift1: f64,
    /// `D = d + lambda^k f12 x_plus`.
    pub denom: f64,
    /// `(-b lambda^k / D, -lambda^k / D)`.
    pub scale: (f64, f64),
    /// `f11 x_plus / 2`.
    pub shift2: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// `(a lambda^k / 2 + nu1 M3, a lambda^k / 2)`.
    pub shift3: (f64, f64),
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    x_plus: f64,
    y_minus: f64,
}

impl RescaleChain {
    pub fn new(family: &FamilyHandle, k: u32, mu: f64) -> Self {
        let g = &family.global;
        let t = &family.taylor;
        let lk = lambda_k(family, k);
        let denom = t.d + lk * t.f12 * g.x_plus;
        let nu1 = -(t.e02 / (t.b * t.d)) * lk;
        let nu2 = -nu1 - t.a * lk;
        let m1 = mu + offset_term(family, k) + lk * lk * g.x_plus * (t.a * t.c + t.f20 * g.x_plus);
        let m2 = -denom * m1 / (lk * lk);
        let m3 = m2 + 0.25 * (t.f11 * g.x_plus) * (t.f11 * g.x_plus);
        Self {
            k,
            lambda_k: lk,
            shift1: lk * t.a * g.x_plus,
            denom,
            scale: (-t.b * lk / denom, -lk / denom),
            shift2: 0.5 * t.f11 * g.x_plus,
            nu1,
            nu2,
            shift3: (0.5 * t.a * lk + nu1 * m3, 0.5 * t.a * lk),
            m1,
            m2,
            m3,
            x_plus: g.x_plus,
            y_minus: g.y_minus,
        }
    }

    /// Derivative of `(X, Y) -> (x0, y_k)` (the chain is affine).
    pub fn linear_part(&self) -> Jacobian2 {
        let det = 1.0 + self.nu1 * self.nu2;
        let mix_inv = Jacobian2::new(1.0 / det, -self.nu1 / det, self.nu2 / det, 1.0 / det);
        Jacobian2::new(self.scale.0, 0.0, 0.0, self.scale.1) * mix_inv
    }

    /// `(X, Y) -> (x0, y_k)`.
    pub fn to_cross(&self, z: PlanarPoint) -> PlanarPoint {
        let x = z.x + self.shift3.0;
        let y = z.y + self.shift3.1;
        let det = 1.0 + self.nu1 * self.nu2;
        let u = (x - self.nu1 * y) / det + self.shift2;
        let v = (y + self.nu2 * x) / det + self.shift2;
        PlanarPoint::new(self.scale.0 * u + self.x_plus + self.shift1, self.scale.1 * v + self.y_minus)
    }

    /// `(x0, y_k) -> (X, Y)`.
    pub fn from_cross(&self, q: PlanarPoint) -> PlanarPoint {
        let u = (q.x - self.x_plus - self.shift1) / self.scale.0 - self.shift2;
        let v = (q.y - self.y_minus) / self.scale.1 - self.shift2;
        let x = u + self.nu1 * v;
        let y = v - self.nu2 * u;
        PlanarPoint::new(x - self.shift3.0, y - self.shift3.1)
    }
}

/// `T_k` conjugated by the zero-order chain.
#[derive(Debug, Clone, Copy)]
pub struct RescaledMap<'a> {
    pub rm: ReturnMap<'a>,
    pub chain: RescaleChain,
    /// Rescaled parameter at `rm.mu` (zero-order convention).
    pub m: f64,
    pub cubic: f64,
}

impl<'a> RescaledMap<'a> {
    pub fn new(rm: ReturnMap<'a>) -> Result<Self> {
        let p = m_from_mu(rm.family, rm.k, rm.mu)?;
        Ok(Self { chain: RescaleChain::new(rm.family, rm.k, rm.mu), rm, m: p.m, cubic: p.correction_cubic })
    }

    /// The rescaled map at parameter `M`, i.e. `T_k` at `mu_from_m(M)`.
    pub fn at_m(family: &'a FamilyHandle, k: u32, m: f64) -> Result<Self> {
        let mu = mu_from_m(family, k, m);
        let rm = ReturnMap::at_mu(family, k, mu)?;
        Ok(Self { chain: RescaleChain::new(family, k, mu), rm, m, cubic: cubic_correction(family, k) })
    }

    /// Half-width `|lambda|^(-k/4)` of the square on which the rescaled map is
    /// meant to approximate the limit.
    pub fn window(&self) -> f64 {
        math::powf(self.rm.family.local.lambda.abs(), -(self.rm.k as f64) / 4.0)
    }

    pub fn eval(&self, z: PlanarPoint) -> Result<PlanarPoint> {
        let (q, _) = self.rm.eval_cross(self.chain.to_cross(z))?;
        Ok(self.chain.from_cross(q))
    }

    pub fn eval_with_jacobian(&self, z: PlanarPoint) -> Result<(PlanarPoint, Jacobian2)> {
        let l = self.chain.linear_part();
        let (q, j) = self.rm.eval_cross(self.chain.to_cross(z))?;
        Ok((self.chain.from_cross(q), l.inverse()? * j * l))
    }

    /// The limit map at this `M`, cubic term included.
    pub fn limit(&self, z: PlanarPoint) -> PlanarPoint {
        limit_map(self.m, self.cubic, z)
    }

    /// Original coordinates of a rescaled point.
    pub fn to_original(&self, z: PlanarPoint) -> Result<PlanarPoint> {
        self.rm.from_cross(self.chain.to_cross(z))
    }

    /// Rescaled coordinates of an original point.
    pub fn from_original(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        Ok(self.chain.from_cross(self.rm.to_cross(p)?))
    }
}

pub fn rescaled_return_map(rm: ReturnMap<'_>) -> Result<RescaledMap<'_>> {
    RescaledMap::new(rm)
}

/// `X' = Y, Y' = M + X - Y^2 + cubic Y^3`.
pub fn limit_map(m: f64, cubic: f64, z: PlanarPoint) -> PlanarPoint {
    let h = henon(m, z);
    PlanarPoint::new(h.x, h.y + cubic * z.y * z.y * z.y)
}

/// Uniform grid of `n x n` points on `[-half, half]^2`.
pub fn grid(n: usize, half: f64) -> Vec<PlanarPoint> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let t = |s: usize| -half + 2.0 * half * s as f64 / (n - 1) as f64;
            out.push(PlanarPoint::new(t(i), t(j)));
        }
    }
    out
}

/// `sup |F(Z) - limit(Z)|` (max norm) over `points`.
pub fn limit_residual<F>(f: F, m: f64, cubic: f64, points: &[PlanarPoint]) -> Result<f64>
where
    F: Fn(PlanarPoint) -> Result<PlanarPoint>,
{
    let mut worst = 0.0f64;
    for &z in points {
        let w = f(z)?;
        let l = limit_map(m, cubic, z);
        worst = worst.max((w.x - l.x).abs()).max((w.y - l.y).abs());
    }
    Ok(worst)
}

/// Measured next-order correction of the chain: `Z = A W + t` and
/// `M_eff = M + m_shift` such that `W -> A^{-1}(R(A W + t) - t)` best matches
/// the limit map at `M_eff`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineNormalization {
    pub matrix: Jacobian2,
    pub shift: PlanarPoint,
    pub m_effective: f64,
    /// Sup residual on the fitting grid.
    pub fit_residual: f64,
}

impl AffineNormalization {
    pub const IDENTITY: Self =
        Self { matrix: Jacobian2::IDENTITY, shift: PlanarPoint::new(0.0, 0.0), m_effective: f64::NAN, fit_residual: f64::NAN };

    fn from_params(p: &[f64; 7], m: f64) -> Self {
        Self {
            matrix: Jacobian2::new(1.0 + p[0], p[1], p[2], 1.0 + p[3]),
            shift: PlanarPoint::new(p[4], p[5]),
            m_effective: m + p[6],
            fit_residual: f64::NAN,
        }
    }

    pub fn eval(&self, map: &RescaledMap<'_>, w: PlanarPoint) -> Result<PlanarPoint> {
        let z = self.matrix.apply(w);
        let z = PlanarPoint::new(z.x + self.shift.x, z.y + self.shift.y);
        let zb = map.eval(z)?;
        let inv = self.matrix.inverse()?;
        Ok(inv.apply(PlanarPoint::new(zb.x - self.shift.x, zb.y - self.shift.y)))
    }
}

/// Points used by [`normalize`]: a 6 x 6 grid on `[-2, 2]^2`, offset from the
/// 9 x 9 evaluation grid of [`convergence_report`] except at the corners.
pub fn fit_grid() -> Vec<PlanarPoint> {
    grid(6, 2.0)
}

fn fit_residuals(map: &RescaledMap<'_>, p: &[f64; 7], pts: &[PlanarPoint]) -> Result<Vec<f64>> {
    let n = AffineNormalization::from_params(p, map.m);
    let mut out = Vec::with_capacity(2 * pts.len());
    for &w in pts {
        let v = n.eval(map, w)?;
        let l = limit_map(n.m_effective, map.cubic, w);
        out.push(v.x - l.x);
        out.push(v.y - l.y);
    }
    Ok(out)
}

/// Gauss-Newton fit of the affine normalization.
pub fn normalize(map: &RescaledMap<'_>) -> Result<AffineNormalization> {
    let pts = fit_grid();
    let mut p = [0.0f64; 7];
    let mut r = fit_residuals(map, &p, &pts)?;
    let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
    let mut cur = norm(&r);
    for _ in 0..12 {
        let rows = r.len();
        let mut jac = alloc::vec![0.0; rows * 7];
        for c in 0..7 {
            let h = 1e-6;
            let mut pp = p;
            pp[c] += h;
            let rp = fit_residuals(map, &pp, &pts)?;
            pp[c] -= 2.0 * h;
            let rm = fit_residuals(map, &pp, &pts)?;
            for i in 0..rows {
                jac[i * 7 + c] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = lstsq(&jac, rows, 7, &neg)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let mut trial = p;
            for c in 0..7 {
                trial[c] += t * step[c];
            }
            let rt = fit_residuals(map, &trial, &pts)?;
            let nt = norm(&rt);
            if nt < cur {
                p = trial;
                r = rt;
                cur = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let size = step.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if !accepted || size < 1e-13 {
            break;
        }
    }
    let mut out = AffineNormalization::from_params(&p, map.m);
    out.fit_residual = r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub k: u32,
    pub m: f64,
    pub mu: f64,
    pub m_effective: f64,
    /// Sup residual on the 9 x 9 grid after the measured normalization.
    pub sup_residual: f64,
    /// `sup_residual / (k lambda^(2k))`.
    pub normalized_residual: f64,
    /// Sup residual of the zero-order chain alone.
    pub zero_order_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub m: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Theil-Sen slope of `ln sup_residual` against `k`.
    pub raw_log_slope: f64,
    /// Expected slope `2 ln |lambda|`.
    pub expected_log_slope: f64,
    /// Theil-Sen slope of `ln normalized_residual` against `k`.
    pub normalized_log_slope: f64,
    /// All residuals at roundoff level.
    pub at_roundoff: bool,
    pub bounded: bool,
}

/// Residuals below this are treated as roundoff.
pub const ROUNDOFF_RESIDUAL: f64 = 1e-11;

/// Residual of the rescaled `T_k` against the limit map, per `k`.
pub fn convergence_report(family: &FamilyHandle, ks: core::ops::RangeInclusive<u32>, m: f64) -> Result<ConvergenceReport> {
    let eval_pts = grid(9, 2.0);
    let mut rows = Vec::new();
    for k in ks {
        rows.push(convergence_row(family, k, m, &eval_pts)?);
    }
    summarize(family, m, rows)
}

pub fn convergence_row(family: &FamilyHandle, k: u32, m: f64, eval_pts: &[PlanarPoint]) -> Result<ConvergenceRow> {
    let map = RescaledMap::at_m(family, k, m)?;
    let zero = limit_residual(|z| map.eval(z), m, map.cubic, eval_pts)?;
    let norm = normalize(&map)?;
    let sup = limit_residual(|w| norm.eval(&map, w), norm.m_effective, map.cubic, eval_pts)?;
    let lk = map.chain.lambda_k;
    Ok(ConvergenceRow {
        k,
        m,
        mu: map.rm.mu,
        m_effective: norm.m_effective,
        sup_residual: sup,
        normalized_residual: sup / (k as f64 * lk * lk),
        zero_order_residual: zero,
    })
}

pub fn summarize(family: &FamilyHandle, m: f64, rows: Vec<ConvergenceRow>) -> Result<ConvergenceReport> {
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let floor = |v: f64| math::ln(v.max(1e-300));
    let raw: Vec<f64> = rows.iter().map(|r| floor(r.sup_residual)).collect();
    let nrm: Vec<f64> = rows.iter().map(|r| floor(r.normalized_residual)).collect();
    let expected = 2.0 * math::ln(family.local.lambda.abs());
    let (raw_slope, nrm_slope) = if rows.len() >= 2 { (theil_sen(&ks, &raw)?, theil_sen(&ks, &nrm)?) } else { (f64::NAN, f64::NAN) };
    let at_roundoff = rows.iter().all(|r| r.sup_residual <= ROUNDOFF_RESIDUAL);
    let bounded = at_roundoff || raw_slope <= expected + 0.4;
    Ok(ConvergenceReport {
        m,
        rows,
        raw_log_slope: raw_slope,
        expected_log_slope: expected,
        normalized_log_slope: nrm_slope,
        at_roundoff,
        bounded,
    })
}

/// Least-squares fit of the second component of a map on `[-half, half]^2`
/// by a full cubic in `(X, Y)`; returns the ten coefficients in the order
/// `1, X, Y, X^2, XY, Y^2, X^3, X^2 Y, X Y^2, Y^3`.
pub fn fit_second_component_cubic<F>(f: F, n: usize, half: f64) -> Result<[f64; 10]>
where
    F: Fn(PlanarPoint) -> Result<PlanarPoint>,
{
    let pts = grid(n, half);
    let mut a = Vec::with_capacity(10 * pts.len());
    let mut b = Vec::with_capacity(pts.len());
    for &z in &pts {
        let (x, y) = (z.x, z.y);
        a.extend_from_slice(&[1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y]);
        b.push(f(z)?.y);
    }
    let c = lstsq(&a, pts.len(), 10, &b)?;
    let mut out = [0.0; 10];
    out.copy_from_slice(&c);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn henon_itself_has_zero_residual() {
        let pts = grid(9, 2.0);
        let r = limit_residual(|z| Ok(henon(0.4, z)), 0.4, 0.0, &pts).unwrap();
        assert_eq!(r, 0.0);
    }
}
