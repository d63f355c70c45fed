//! First-return maps `T_k = T1 ∘ T0^k` near the homoclinic orbit.
//!
//! Besides the original coordinates the module works in *cross coordinates*
//! `(x0, y_k)`: the entry abscissa and the exit ordinate of the `k` steps spent
//! near the saddle. Both are `O(1)` on the strip `sigma_k^0`, whereas `y0` is
//! `O(lambda^k)`, so everything that needs conditioning (Newton, component
//! counting, rescaling) is done there. The change of variables is exact
//! because the Moser form preserves `u = xy`.

use alloc::vec::Vec;

use crate::family::{FamilyHandle, LocalMapParams};
use crate::map::{Jacobian2, PlanarPoint, ESCAPE_RADIUS};
use crate::math;
use crate::numeric::linear_fit;
use crate::{Error, Result};

/// Smallest tracked scale: `|lambda|^(2k)` must stay above this.
pub const SCALE_FLOOR: f64 = 1e-10;

fn signed_pow(lambda_b: f64, k: i64) -> f64 {
    let mag = math::exp(k as f64 * math::ln(lambda_b.abs()));
    if lambda_b < 0.0 && k % 2 != 0 {
        -mag
    } else {
        mag
    }
}

/// `T0^k(p)` from the integral `u = xy`, with powers accumulated in the log
/// domain.
pub fn t0_pow_closed(local: &LocalMapParams, p: PlanarPoint, k: u32) -> Result<PlanarPoint> {
    if !p.is_finite() {
        return Err(Error::InvalidParameter("point not finite"));
    }
    let u = p.x * p.y;
    let lb = local.lambda * local.b(u);
    if lb == 0.0 || !lb.is_finite() {
        return Err(Error::Escaped { stage: 0 });
    }
    let q = PlanarPoint::new(p.x * signed_pow(lb, k as i64), p.y * signed_pow(lb, -(k as i64)));
    if !q.is_finite() || q.x.abs() + q.y.abs() > ESCAPE_RADIUS {
        return Err(Error::Escaped { stage: 0 });
    }
    Ok(q)
}

/// `T0^k(p)` and its Jacobian.
pub fn t0_pow_with_jacobian(local: &LocalMapParams, p: PlanarPoint, k: u32) -> Result<(PlanarPoint, Jacobian2)> {
    let q = t0_pow_closed(local, p, k)?;
    let u = p.x * p.y;
    let bu = local.b(u);
    let w = k as f64 * local.db(u) / bu;
    let lb = local.lambda * bu;
    let up = signed_pow(lb, k as i64);
    let down = signed_pow(lb, -(k as i64));
    let j = Jacobian2::new(
        up * (1.0 + u * w),
        up * p.x * p.x * w,
        -down * p.y * p.y * w,
        down * (1.0 - u * w),
    );
    Ok((q, j))
}

/// Solves `u = lambda^k x0 y_k B(u)^k` by Newton; `u = x0 y0 = x_k y_k`.
pub fn cross_solve(local: &LocalMapParams, x0: f64, yk: f64, k: u32) -> Result<f64> {
    let s = signed_pow(local.lambda, k as i64) * x0 * yk;
    let kk = k as i32;
    let mut u = s;
    for _ in 0..60 {
        let bu = local.b(u);
        let bk = math::powi(bu, kk);
        let phi = u - s * bk;
        let dphi = 1.0 - s * k as f64 * math::powi(bu, kk - 1) * local.db(u);
        if dphi == 0.0 || !dphi.is_finite() {
            break;
        }
        let step = phi / dphi;
        u -= step;
        if !u.is_finite() {
            break;
        }
        if step.abs() <= 1e-17 + 4.0 * f64::EPSILON * u.abs() {
            return Ok(u);
        }
    }
    Err(Error::CrossFormSolveFailed { k })
}

/// Residuals of the first-order cross form at one `k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossFormReport {
    pub k: u32,
    pub samples: usize,
    /// `sup |x_k - lambda^k x0 R1| , |y0 - lambda^k y_k R1|` over the samples.
    pub sup_residual: f64,
    /// `sup_residual / lambda^(2k)`.
    pub normalized: f64,
    /// Measured coefficient of `lambda^k x0 y_k` in `x_k / (lambda^k x0)`;
    /// `beta_1 k` to leading order.
    pub beta_tilde: f64,
}

/// Compares exact `T0^k` in cross form against
/// `x_k = lambda^k x0 R1`, `y0 = lambda^k y_k R1`, `R1 = 1 + beta_1 k lambda^k x0 y_k`.
pub fn validate_cross_form(local: &LocalMapParams, k: u32, samples: &[PlanarPoint]) -> Result<CrossFormReport> {
    local.validate()?;
    if samples.len() < 3 {
        return Err(Error::InvalidParameter("cross-form validation needs at least 3 samples"));
    }
    let lk = signed_pow(local.lambda, k as i64);
    let beta1 = local.beta1();
    let mut sup = 0.0f64;
    let mut ws = Vec::with_capacity(samples.len());
    let mut rs = Vec::with_capacity(samples.len());
    for q in samples {
        let (x0, yk) = (q.x, q.y);
        let u = cross_solve(local, x0, yk, k)?;
        let bk = math::powi(local.b(u), k as i32);
        let xk = lk * x0 * bk;
        let y0 = lk * yk * bk;
        let w = lk * x0 * yk;
        let r1 = 1.0 + beta1 * k as f64 * w;
        sup = sup.max((xk - lk * x0 * r1).abs()).max((y0 - lk * yk * r1).abs());
        ws.push(w);
        rs.push(bk - 1.0);
    }
    // (B^k - 1) = beta_tilde w + O(w^2): quadratic fit, keep the linear term.
    let n = ws.len();
    let mut a = Vec::with_capacity(2 * n);
    for &w in &ws {
        a.push(w);
        a.push(w * w);
    }
    let beta_tilde = if rs.iter().all(|&r| r == 0.0) {
        0.0
    } else {
        crate::numeric::lstsq(&a, n, 2, &rs)?[0]
    };
    Ok(CrossFormReport { k, samples: n, sup_residual: sup, normalized: sup / (lk * lk), beta_tilde })
}

/// `n` low-discrepancy cross-coordinate samples `(x0, y_k)` in `[1/2, 3/2]^2`.
pub fn cross_form_samples(n: usize) -> Vec<PlanarPoint> {
    crate::numeric::halton2(n).into_iter().map(|(u, v)| PlanarPoint::new(0.5 + u, 0.5 + v)).collect()
}

/// Regression of measured `beta_tilde` against `k`; the slope estimates `beta_1`.
pub fn beta_slope(reports: &[CrossFormReport]) -> Result<f64> {
    let ks: Vec<f64> = reports.iter().map(|r| r.k as f64).collect();
    let bs: Vec<f64> = reports.iter().map(|r| r.beta_tilde).collect();
    Ok(linear_fit(&ks, &bs)?.1)
}

/// Smallest `k` for which both strips sit inside the windows `Pi+-`.
pub fn k_min(family: &FamilyHandle) -> u32 {
    let g = &family.global;
    let delta = g.window_half_width();
    let reach = 2.0 * (g.x_plus.max(g.y_minus) + delta);
    let l = family.local.lambda.abs();
    let mut k = 1;
    while math::powi(l, k as i32) * reach > delta && k < 200 {
        k += 1;
    }
    k
}

/// Largest `k` with `|lambda|^(2k) >= SCALE_FLOOR`.
pub fn k_max(lambda: f64) -> u32 {
    let l = lambda.abs();
    let mut k = 0u32;
    while math::powi(l, 2 * (k as i32 + 1)) >= SCALE_FLOOR && k < 10_000 {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnMap<'a> {
    pub family: &'a FamilyHandle,
    pub k: u32,
    pub mu: f64,
}

impl<'a> ReturnMap<'a> {
    /// `T_k` at the family's own splitting parameter.
    pub fn new(family: &'a FamilyHandle, k: u32) -> Result<Self> {
        Self::at_mu(family, k, family.global.mu)
    }

    pub fn at_mu(family: &'a FamilyHandle, k: u32, mu: f64) -> Result<Self> {
        let (lo, hi) = (k_min(family), k_max(family.local.lambda));
        if k < lo || k > hi {
            return Err(Error::KOutOfRange { k, k_min: lo, k_max: hi });
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite"));
        }
        Ok(Self { family, k, mu })
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn lambda_k(&self) -> f64 {
        signed_pow(self.family.local.lambda, self.k as i64)
    }

    /// Period of a fixed point of `T_k` as a periodic orbit of the full map.
    pub fn period(&self) -> u32 {
        self.k + self.family.global.n0
    }

    pub fn eval(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        let q = t0_pow_closed(&self.family.local, p, self.k)?;
        self.family.global.eval_at(q, self.mu)
    }

    pub fn eval_with_jacobian(&self, p: PlanarPoint) -> Result<(PlanarPoint, Jacobian2)> {
        let (q, j0) = t0_pow_with_jacobian(&self.family.local, p, self.k)?;
        let (r, j1) = self.family.global.eval_with_jacobian_at(q, self.mu)?;
        Ok((r, j1 * j0))
    }

    /// Original point `(x0, y0)` from cross coordinates `(x0, y_k)`.
    pub fn from_cross(&self, q: PlanarPoint) -> Result<PlanarPoint> {
        let u = cross_solve(&self.family.local, q.x, q.y, self.k)?;
        Ok(PlanarPoint::new(q.x, u / q.x))
    }

    /// Cross coordinates `(x0, y_k)` of an original point.
    pub fn to_cross(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        let q = t0_pow_closed(&self.family.local, p, self.k)?;
        Ok(PlanarPoint::new(p.x, q.y))
    }

    /// `T_k` in cross coordinates with its Jacobian.
    pub fn eval_cross(&self, q: PlanarPoint) -> Result<(PlanarPoint, Jacobian2)> {
        let local = &self.family.local;
        let k = self.k;
        let kk = k as i32;
        let lk = self.lambda_k();
        let (x0, yk) = (q.x, q.y);
        let u = cross_solve(local, x0, yk, k)?;
        let bu = local.b(u);
        let dbu = local.db(u);
        let bk = math::powi(bu, kk);
        let bk1 = math::powi(bu, kk - 1);
        let s = lk * x0 * yk;
        let den = 1.0 - s * k as f64 * bk1 * dbu;
        let du_dx = lk * yk * bk / den;
        let du_dy = lk * x0 * bk / den;
        let xk = lk * x0 * bk;
        let j1 = Jacobian2::new(lk * bk + lk * x0 * k as f64 * bk1 * dbu * du_dx, lk * x0 * k as f64 * bk1 * dbu * du_dy, 0.0, 1.0);
        let (img, j2) = self.family.global.eval_with_jacobian_at(PlanarPoint::new(xk, yk), self.mu)?;
        let ub = img.x * img.y;
        let bb = local.b(ub);
        let dbb = local.db(ub);
        let lb = self.family.local.lambda * bb;
        let down = signed_pow(lb, -(k as i64));
        let ykn = img.y * down;
        if !ykn.is_finite() || ykn.abs() > ESCAPE_RADIUS {
            return Err(Error::Escaped { stage: 0 });
        }
        let w = k as f64 * dbb / bb;
        let j3 = Jacobian2::new(1.0, 0.0, -down * img.y * img.y * w, down * (1.0 - ub * w));
        Ok((PlanarPoint::new(img.x, ykn), j3 * j2 * j1))
    }
}

pub fn build_return_map(family: &FamilyHandle, k: u32) -> Result<ReturnMap<'_>> {
    ReturnMap::new(family, k)
}

pub fn eval_return(rm: &ReturnMap<'_>, p: PlanarPoint) -> Result<PlanarPoint> {
    rm.eval(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StripKind {
    Sigma0,
    Sigma1,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Strip {
    pub which: StripKind,
    pub k: u32,
    /// `(x_min, y_min, x_max, y_max)`.
    pub bbox: (f64, f64, f64, f64),
    /// Closed boundary polyline in original coordinates.
    pub boundary: Vec<PlanarPoint>,
    /// Distance from the strip's centre line to the local manifold it
    /// accumulates on: `|y0|` at `(x_plus, y_k = y_minus)` for `sigma0`,
    /// `|x_k|` there for `sigma1`.
    pub centre_distance: f64,
}

/// `sigma_k^0 = Pi+ ∩ T0^{-k} Pi-` and `sigma_k^1 = T0^k sigma_k^0`.
pub fn strips(family: &FamilyHandle, k: u32) -> Result<(Strip, Strip)> {
    let lo = k_min(family);
    if k < lo {
        return Err(Error::StripOutsideWindow { k, k_min: lo });
    }
    let g = &family.global;
    let delta = g.window_half_width();
    let local = &family.local;
    const SIDE: usize = 16;
    let mut ring = Vec::with_capacity(4 * SIDE);
    let corners = [
        (g.x_plus - delta, g.y_minus - delta),
        (g.x_plus + delta, g.y_minus - delta),
        (g.x_plus + delta, g.y_minus + delta),
        (g.x_plus - delta, g.y_minus + delta),
    ];
    for i in 0..4 {
        let (ax, ay) = corners[i];
        let (bx, by) = corners[(i + 1) % 4];
        for j in 0..SIDE {
            let t = j as f64 / SIDE as f64;
            ring.push(PlanarPoint::new(ax + t * (bx - ax), ay + t * (by - ay)));
        }
    }
    let mut b0 = Vec::with_capacity(ring.len());
    let mut b1 = Vec::with_capacity(ring.len());
    for q in &ring {
        let u = cross_solve(local, q.x, q.y, k)?;
        b0.push(PlanarPoint::new(q.x, u / q.x));
        b1.push(PlanarPoint::new(u / q.y, q.y));
    }
    let bbox = |pts: &[PlanarPoint]| {
        pts.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, p| {
            (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y))
        })
    };
    let uc = cross_solve(local, g.x_plus, g.y_minus, k)?;
    let s0 = Strip { which: StripKind::Sigma0, k, bbox: bbox(&b0), centre_distance: (uc / g.x_plus).abs(), boundary: b0 };
    let s1 = Strip { which: StripKind::Sigma1, k, bbox: bbox(&b1), centre_distance: (uc / g.y_minus).abs(), boundary: b1 };
    Ok((s0, s1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum HorseshoeTag {
    Empty,
    Regular,
    ParityAlternating,
    AlphaNegativeHorseshoes,
    AlphaPositiveTrivial,
}

/// Component count of `sigma_k^0 ∩ T_k^{-1} sigma_k^0` (homeomorphic to
/// `sigma_k^0 ∩ T1(sigma_k^1)`) at one `k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentCount {
    pub k: u32,
    pub components: usize,
    /// Every component reaches both vertical sides of the window.
    pub spanning: bool,
    /// The count repeated at two successive refinements.
    pub stable: bool,
    /// Columns x rows at the final refinement.
    pub columns: usize,
    pub rows: usize,
    /// Vertical cone mapped into itself with expansion >= 2 at a sample point
    /// of every component.
    pub cone_ok: bool,
    /// Count the sign table predicts: 2 when `sign(lambda)^k (-alpha) d > 0`.
    pub predicted: usize,
}

impl ComponentCount {
    /// 0 or 2 spanning components, stable under refinement.
    pub fn conclusive(&self) -> bool {
        self.stable && (self.components == 0 || (self.components == 2 && self.spanning))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HorseshoeClass {
    pub tag: HorseshoeTag,
    pub evidence: Vec<ComponentCount>,
    pub matches_prediction: bool,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let n = self.0[j];
            self.0[j] = r;
            j = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One sampling pass: returns `(components, spanning, midpoints)`.
fn sample_components(rm: &ReturnMap<'_>, (dx, dy): (f64, f64), cols: usize, rows: usize) -> (usize, bool, Vec<PlanarPoint>) {
    let g = &rm.family.global;
    let inside = |p: PlanarPoint| (p.x - g.x_plus).abs() <= dx && (p.y - g.y_minus).abs() <= dy;
    let xs: Vec<f64> = (0..cols).map(|j| g.x_plus - dx + 2.0 * dx * j as f64 / (cols - 1) as f64).collect();
    let ys: Vec<f64> = (0..rows).map(|i| g.y_minus - dy + 2.0 * dy * i as f64 / (rows - 1) as f64).collect();
    // intervals[(col, lo_row, hi_row)]
    let mut intervals: Vec<(usize, usize, usize)> = Vec::new();
    for (j, &x) in xs.iter().enumerate() {
        let mut start: Option<usize> = None;
        for (i, &y) in ys.iter().enumerate() {
            let hit = matches!(rm.eval_cross(PlanarPoint::new(x, y)), Ok((p, _)) if inside(p));
            match (hit, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    intervals.push((j, s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            intervals.push((j, s, rows - 1));
        }
    }
    let mut dsu = Dsu((0..intervals.len()).collect());
    let mut first_in_col = Vec::with_capacity(cols + 1);
    let mut idx = 0;
    for j in 0..=cols {
        while idx < intervals.len() && intervals[idx].0 < j {
            idx += 1;
        }
        first_in_col.push(idx);
    }
    for j in 0..cols.saturating_sub(1) {
        for a in first_in_col[j]..first_in_col[j + 1] {
            for b in first_in_col[j + 1]..first_in_col[j + 2] {
                let (_, alo, ahi) = intervals[a];
                let (_, blo, bhi) = intervals[b];
                if alo <= bhi && blo <= ahi {
                    dsu.union(a, b);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut spans: Vec<(usize, usize, PlanarPoint)> = Vec::new();
    for (a, &(col, lo, hi)) in intervals.iter().enumerate() {
        let r = dsu.find(a);
        let mid = PlanarPoint::new(xs[col], ys[(lo + hi) / 2]);
        match roots.iter().position(|&x| x == r) {
            Some(p) => {
                spans[p].0 = spans[p].0.min(col);
                spans[p].1 = spans[p].1.max(col);
                if col == cols / 2 {
                    spans[p].2 = mid;
                }
            }
            None => {
                roots.push(r);
                spans.push((col, col, mid));
            }
        }
    }
    let spanning = spans.iter().all(|s| s.0 == 0 && s.1 == cols - 1);
    (roots.len(), spanning, spans.into_iter().map(|s| s.2).collect())
}

fn cone_check(rm: &ReturnMap<'_>, q: PlanarPoint) -> bool {
    let Ok((_, j)) = rm.eval_cross(q) else {
        return false;
    };
    [-1.0, 0.0, 1.0].iter().all(|&s| {
        let v = j.apply(PlanarPoint::new(s, 1.0));
        v.x.abs() <= v.y.abs() && v.y.abs() >= 2.0
    })
}

/// Predicted component count at `mu = 0`.
pub fn predicted_components(family: &FamilyHandle, k: u32) -> usize {
    let sl = if family.local.lambda < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    if sl * (-family.alpha) * family.taylor.d > 0.0 {
        2
    } else {
        0
    }
}

/// Half-widths `(dx, dy)` of the box sampled by [`count_components`].
///
/// At `mu = 0` the fold of the image sits at depth `s = |c x+ - y-|` from
/// the box. Two legs cross the whole box when `|c| dx + dy < s`; the legs
/// sit at `|eta| ~ sqrt(|lambda|^k s / |d|)`, which must fit both in `dy`
/// and, after multiplication by `b`, in `dx`. Taking `|c| dx = dy = 0.45 s`
/// resolves the count once `s` exceeds about `10 |lambda|^k`. Both widths
/// are capped by the family window and floored at a couple of strip widths.
pub fn horseshoe_window(family: &FamilyHandle, k: u32) -> (f64, f64) {
    let g = &family.global;
    let t = &family.taylor;
    let cap = g.window_half_width();
    let floor = 2.0 * math::powi(family.local.lambda.abs(), k as i32) * g.x_plus.min(g.y_minus);
    let s = (family.alpha * g.y_minus).abs();
    let dx = if t.c == 0.0 { cap } else { (0.45 * s / t.c.abs()).min(cap) };
    let dy = (0.45 * s).min(cap);
    (dx.max(floor), dy.max(floor))
}

/// Counts components at one `k` (family taken at `mu = 0`), doubling the
/// sampling density until the count repeats twice.
pub fn count_components(family: &FamilyHandle, k: u32) -> Result<ComponentCount> {
    let fam0;
    let family = if family.global.mu != 0.0 {
        fam0 = family.at_mu(0.0);
        &fam0
    } else {
        family
    };
    let rm = ReturnMap::at_mu(family, k, 0.0)?;
    let window = horseshoe_window(family, k);
    let (mut cols, mut rows) = (8usize, 256usize);
    let mut history: Vec<usize> = Vec::new();
    let mut last = (0, true, Vec::new());
    let mut stable = false;
    while cols <= 64 {
        last = sample_components(&rm, window, cols, rows);
        history.push(last.0);
        let n = history.len();
        if n >= 3 && history[n - 1] == history[n - 2] && history[n - 2] == history[n - 3] {
            stable = true;
            break;
        }
        cols *= 2;
        rows *= 2;
    }
    let (cols, rows) = if stable { (cols, rows) } else { (cols / 2, rows / 2) };
    let cone_ok = last.2.iter().all(|&q| cone_check(&rm, q));
    Ok(ComponentCount {
        k,
        components: last.0,
        spanning: last.1,
        stable,
        columns: cols,
        rows,
        cone_ok,
        predicted: predicted_components(family, k),
    })
}

/// Horseshoe classification over a range of `k` at `mu = 0`.
pub fn classify_horseshoe(family: &FamilyHandle, ks: core::ops::RangeInclusive<u32>) -> Result<HorseshoeClass> {
    let evidence: Vec<ComponentCount> = ks.map(|k| count_components(family, k)).collect::<Result<_>>()?;
    classify_from_evidence(family, evidence)
}

/// Tag from per-`k` counts; fails with `Inconclusive` at the first
/// inconclusive `k`.
pub fn classify_from_evidence(family: &FamilyHandle, evidence: Vec<ComponentCount>) -> Result<HorseshoeClass> {
    if evidence.is_empty() {
        return Err(Error::InvalidParameter("empty k range"));
    }
    if let Some(bad) = evidence.iter().find(|e| !e.conclusive()) {
        return Err(Error::Inconclusive { k: bad.k });
    }
    let all = |n: usize| evidence.iter().all(|e| e.components == n);
    let c_pos = family.taylor.c > 0.0;
    let tag = if all(0) {
        if c_pos && family.alpha > 0.0 {
            HorseshoeTag::AlphaPositiveTrivial
        } else {
            HorseshoeTag::Empty
        }
    } else if all(2) {
        if c_pos && family.alpha < 0.0 {
            HorseshoeTag::AlphaNegativeHorseshoes
        } else {
            HorseshoeTag::Regular
        }
    } else if alternates(&evidence) {
        HorseshoeTag::ParityAlternating
    } else {
        return Err(Error::Inconclusive { k: evidence[0].k });
    };
    let matches_prediction = evidence.iter().all(|e| e.components == e.predicted);
    Ok(HorseshoeClass { tag, evidence, matches_prediction })
}

fn alternates(evidence: &[ComponentCount]) -> bool {
    let of_parity = |p: u32| {
        let mut it = evidence.iter().filter(move |e| e.k % 2 == p).map(|e| e.components);
        let first = it.next();
        first.filter(|&f| it.all(|c| c == f))
    };
    matches!((of_parity(0), of_parity(1)), (Some(0), Some(2)) | (Some(2), Some(0)))
}
