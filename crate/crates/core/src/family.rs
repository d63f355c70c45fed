//! Homoclinic model families: the saddle map in Moser form, the
//! orientation-reversing global map, its Taylor data at the homoclinic point,
//! and the two invariants `alpha` and `s0`.
//!
//! Coordinates follow the usual local picture: the saddle sits at the origin,
//! `W^s_loc` is `{y = 0}`, `W^u_loc` is `{x = 0}`, the homoclinic points are
//! `M+ = (x_plus, 0)` and `M- = (0, y_minus)`, and the global map `T1` sends a
//! neighbourhood of `M-` to a neighbourhood of `M+`:
//!
//! ```text
//! x' - x_plus = a x + b eta + e20 x^2 + e11 x eta + e02 eta^2 + ...
//! y'          = mu + c x + d eta^2 + f20 x^2 + f11 x eta + f30 x^3 + ... + f03 eta^3 + ...
//! ```
//!
//! with `eta = y - y_minus`.

use alloc::vec;
use alloc::vec::Vec;

use crate::map::{Jacobian2, MapExpr, PlanarPoint, Poly, Stage};
use crate::numeric::{halton2, secant};
use crate::{Error, Result};

/// Saddle map `T0` in Moser form `x' = lambda x B(xy)`, `y' = y / (lambda B(xy))`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalMapParams {
    pub lambda: f64,
    /// `beta_1, ..., beta_n` in `B(u) = 1 + beta_1 u + ... + beta_n u^n`.
    pub moser_coeffs: Vec<f64>,
}

impl LocalMapParams {
    pub fn new(lambda: f64, moser_coeffs: Vec<f64>) -> Result<Self> {
        let p = Self { lambda, moser_coeffs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda != 0.0 && self.lambda.abs() < 1.0) {
            return Err(Error::InvalidParameter("lambda must satisfy 0 < |lambda| < 1"));
        }
        if self.moser_coeffs.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("Moser coefficients must be finite"));
        }
        Ok(())
    }

    pub fn beta1(&self) -> f64 {
        self.moser_coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn b_poly(&self) -> Poly {
        let mut c = vec![1.0];
        c.extend_from_slice(&self.moser_coeffs);
        Poly::new(c)
    }

    pub fn b(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.moser_coeffs.iter().rev() {
            acc = acc * u + c;
        }
        1.0 + acc * u
    }

    pub fn db(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.moser_coeffs.iter().enumerate().rev() {
            acc = acc * u + (i + 1) as f64 * c;
        }
        acc
    }

    pub fn map_expr(&self) -> MapExpr {
        MapExpr::new(vec![Stage::Moser { lambda: self.lambda, b: self.b_poly() }])
    }
}

/// The built-in global map constructions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "recipe", rename_all = "kebab-case"))]
pub enum RecipeKind {
    /// `x' = x_plus + P(eta)`, `y' = mu + x / P'(eta) + Q(eta)`.
    ///
    /// `P(0) = 0`, `P'(0) = b`, `Q(0) = Q'(0) = 0`, `Q''(0) = 2d`.
    GeneralizedHenon { p: Poly, q: Poly },
    /// `x' = x_plus + b (eta + h(x))`, `y' = mu + x / b + Q(eta + h(x))`:
    /// an inner horizontal shear, the swap, an outer shear and a diagonal
    /// scaling. `h(0) = 0`; a nonzero `h'(0)` gives `a != 0` and `f20 != 0`.
    ShearSandwich { b: f64, h: Poly, q: Poly },
    /// Arbitrary stages taking `(x, y)` near `M-` to `(x', y' - mu)` near `M+`.
    Custom { stages: MapExpr },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalRecipe {
    pub kind: RecipeKind,
    pub x_plus: f64,
    pub y_minus: f64,
    pub n0: u32,
}

impl GlobalRecipe {
    /// Recipe (i) with `P(eta) = b eta + p2 eta^2 + p3 eta^3` and
    /// `Q(eta) = d eta^2 + q3 eta^3`.
    pub fn generalized_henon(b: f64, p2: f64, p3: f64, d: f64, q3: f64) -> Self {
        Self {
            kind: RecipeKind::GeneralizedHenon {
                p: Poly::from_slice(&[0.0, b, p2, p3]),
                q: Poly::from_slice(&[0.0, 0.0, d, q3]),
            },
            x_plus: 1.0,
            y_minus: 1.0,
            n0: 1,
        }
    }

    /// Shear sandwich with `h(x) = h1 x + h2 x^2` and `Q(w) = d w^2 + q3 w^3`.
    pub fn shear_sandwich(b: f64, h1: f64, h2: f64, d: f64, q3: f64) -> Self {
        Self {
            kind: RecipeKind::ShearSandwich {
                b,
                h: Poly::from_slice(&[0.0, h1, h2]),
                q: Poly::from_slice(&[0.0, 0.0, d, q3]),
            },
            x_plus: 1.0,
            y_minus: 1.0,
            n0: 1,
        }
    }

    pub fn with_homoclinic_points(mut self, x_plus: f64, y_minus: f64) -> Self {
        self.x_plus = x_plus;
        self.y_minus = y_minus;
        self
    }

    pub fn with_n0(mut self, n0: u32) -> Self {
        self.n0 = n0;
        self
    }

    fn stages(&self) -> Result<MapExpr> {
        let (xp, ym) = (self.x_plus, self.y_minus);
        let to_eta = Stage::Translate { dx: 0.0, dy: -ym };
        let to_plus = Stage::Translate { dx: xp, dy: 0.0 };
        let expr = match &self.kind {
            RecipeKind::GeneralizedHenon { p, q } => {
                if p.coeff(0) != 0.0 || p.coeff(1) == 0.0 {
                    return Err(Error::InvalidParameter("P needs P(0) = 0 and P'(0) != 0"));
                }
                if q.coeff(0) != 0.0 || q.coeff(1) != 0.0 {
                    return Err(Error::InvalidParameter("Q needs Q(0) = Q'(0) = 0"));
                }
                // (x, eta) -> (eta, x) -> (eta, x + Q P') -> (P, x / P' + Q)
                vec![
                    to_eta,
                    Stage::Swap,
                    Stage::HorizontalShear { h: q.mul(&p.derivative()) },
                    Stage::PointLift { p: p.clone() },
                    to_plus,
                ]
            }
            RecipeKind::ShearSandwich { b, h, q } => {
                if *b == 0.0 || !b.is_finite() {
                    return Err(Error::InvalidParameter("shear sandwich needs b != 0"));
                }
                if h.coeff(0) != 0.0 {
                    return Err(Error::InvalidParameter("inner shear needs h(0) = 0"));
                }
                if q.coeff(0) != 0.0 || q.coeff(1) != 0.0 {
                    return Err(Error::InvalidParameter("Q needs Q(0) = Q'(0) = 0"));
                }
                vec![
                    to_eta,
                    Stage::HorizontalShear { h: h.clone() },
                    Stage::Swap,
                    Stage::HorizontalShear { h: q.scale(*b) },
                    Stage::Diagonal { lambda: *b },
                    to_plus,
                ]
            }
            RecipeKind::Custom { stages } => return Ok(stages.clone()),
        };
        Ok(MapExpr::new(expr))
    }
}

/// Global map `T1` with the splitting parameter kept apart from the stages:
/// `T1(p) = stages(p) + (0, mu)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalMapSpec {
    pub x_plus: f64,
    pub y_minus: f64,
    pub mu: f64,
    pub n0: u32,
    pub stages: MapExpr,
    pub recipe: RecipeKind,
}

impl GlobalMapSpec {
    pub fn eval_at(&self, p: PlanarPoint, mu: f64) -> Result<PlanarPoint> {
        let q = self.stages.eval(p)?;
        Ok(PlanarPoint::new(q.x, q.y + mu))
    }

    pub fn eval(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        self.eval_at(p, self.mu)
    }

    pub fn eval_with_jacobian_at(&self, p: PlanarPoint, mu: f64) -> Result<(PlanarPoint, Jacobian2)> {
        let (q, j) = self.stages.eval_with_jacobian(p)?;
        Ok((PlanarPoint::new(q.x, q.y + mu), j))
    }

    pub fn jacobian(&self, p: PlanarPoint) -> Result<Jacobian2> {
        self.stages.jacobian(p)
    }

    /// The full map as a single stage list, `mu` included.
    pub fn full_expr(&self) -> MapExpr {
        let mut e = self.stages.clone();
        e.stages.push(Stage::Translate { dx: 0.0, dy: self.mu });
        e
    }

    /// Half-width of the square windows `Pi+` around `M+` and `Pi-` around `M-`.
    pub fn window_half_width(&self) -> f64 {
        self.x_plus.min(self.y_minus) / 10.0
    }
}

/// Taylor coefficients of `T1` at `M-` (see the module docs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaylorData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e20: f64,
    pub e11: f64,
    pub e02: f64,
    pub f20: f64,
    pub f11: f64,
    pub f30: f64,
    pub f21: f64,
    pub f12: f64,
    pub f03: f64,
    /// Measured `G_eta(0)`; zero at a tangency.
    pub g_y: f64,
}

impl TaylorData {
    /// `b c - 1`, zero for any map with determinant -1.
    pub fn bc_residual(&self) -> f64 {
        self.b * self.c - 1.0
    }

    /// `2 a d - b f11 - 2 e02 c`, the first-order consequence of `det = -1`
    /// along the tangency.
    pub fn det_identity_residual(&self) -> f64 {
        2.0 * self.a * self.d - self.b * self.f11 - 2.0 * self.e02 * self.c
    }

    /// The same identity as often printed, `2a + 2 e02 / (b d) - b f11 / d`.
    /// Kept only for comparison; it does not vanish in general.
    pub fn printed_identity_value(&self) -> f64 {
        2.0 * self.a + 2.0 * self.e02 / (self.b * self.d) - self.b * self.f11 / self.d
    }
}

pub fn alpha_of(t: &TaylorData, x_plus: f64, y_minus: f64) -> f64 {
    t.c * x_plus / y_minus - 1.0
}

pub fn s0_of(t: &TaylorData, x_plus: f64) -> f64 {
    t.d * x_plus * (t.a * t.c + t.f20 * x_plus) - 0.25 * (t.f11 * x_plus) * (t.f11 * x_plus)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyHandle {
    pub local: LocalMapParams,
    pub global: GlobalMapSpec,
    pub taylor: TaylorData,
    pub alpha: f64,
    pub s0: f64,
}

impl FamilyHandle {
    /// Same family at a different splitting parameter. The Taylor data do not
    /// depend on `mu`.
    pub fn at_mu(&self, mu: f64) -> Self {
        let mut h = self.clone();
        h.global.mu = mu;
        h
    }

    pub fn lambda(&self) -> f64 {
        self.local.lambda
    }

    /// Images `T1(0, y_minus + eta)` of points of `W^u_loc`.
    pub fn unstable_image(&self, etas: &[f64]) -> Result<Vec<PlanarPoint>> {
        etas.iter()
            .map(|&e| self.global.eval(PlanarPoint::new(0.0, self.global.y_minus + e)))
            .collect()
    }
}

pub fn alpha_invariant(h: &FamilyHandle) -> f64 {
    alpha_of(&h.taylor, h.global.x_plus, h.global.y_minus)
}

pub fn s0_invariant(h: &FamilyHandle) -> f64 {
    s0_of(&h.taylor, h.global.x_plus)
}

pub fn build_family(local: LocalMapParams, recipe: &GlobalRecipe, mu: f64) -> Result<FamilyHandle> {
    local.validate()?;
    if !(recipe.x_plus > 0.0 && recipe.y_minus > 0.0 && recipe.x_plus.is_finite() && recipe.y_minus.is_finite()) {
        return Err(Error::InvalidParameter("x_plus and y_minus must be positive"));
    }
    if !mu.is_finite() {
        return Err(Error::InvalidParameter("mu must be finite"));
    }
    let stages = recipe.stages()?;
    let swaps = stages.swap_count();
    if swaps % 2 == 0 {
        return Err(Error::OrientableGlobalMap { swaps });
    }
    let global = GlobalMapSpec {
        x_plus: recipe.x_plus,
        y_minus: recipe.y_minus,
        mu,
        n0: recipe.n0,
        stages,
        recipe: recipe.kind.clone(),
    };
    let taylor = extract_taylor(&global)?;
    let alpha = alpha_of(&taylor, global.x_plus, global.y_minus);
    let s0 = s0_of(&taylor, global.x_plus);
    Ok(FamilyHandle { local, global, taylor, alpha, s0 })
}

const STENCILS: [&[(i32, f64)]; 4] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
];

const FD_STEP: f64 = 0.1;
const FD_LEVELS: usize = 5;

/// Mixed partial `d^(nx+ny) / dx^nx deta^ny` of `(F, G)` at the origin by a
/// central tensor stencil, Richardson-extrapolated over halved steps.
fn partial<Fn2>(f: &Fn2, nx: usize, ny: usize, scale: f64) -> Result<([f64; 2], [f64; 2])>
where
    Fn2: core::ops::Fn(f64, f64) -> Result<[f64; 2]>,
{
    let mut table: Vec<[f64; 2]> = Vec::with_capacity(FD_LEVELS);
    let mut best = [0.0; 2];
    let mut spread = [f64::INFINITY; 2];
    let mut prev_diag: Vec<[f64; 2]> = Vec::new();
    for level in 0..FD_LEVELS {
        let h = scale * FD_STEP / (1u32 << level) as f64;
        let mut acc = [0.0; 2];
        for &(i, wi) in STENCILS[nx] {
            for &(j, wj) in STENCILS[ny] {
                let v = f(i as f64 * h, j as f64 * h)?;
                acc[0] += wi * wj * v[0];
                acc[1] += wi * wj * v[1];
            }
        }
        let hp = crate::math::powi(h, (nx + ny) as i32);
        let mut row = vec![[acc[0] / hp, acc[1] / hp]];
        let mut factor = 1.0;
        for jcol in 1..=level {
            factor *= 4.0;
            let lo = prev_diag[jcol - 1];
            let hi = row[jcol - 1];
            row.push([hi[0] + (hi[0] - lo[0]) / (factor - 1.0), hi[1] + (hi[1] - lo[1]) / (factor - 1.0)]);
        }
        if level > 0 {
            let last = row[level];
            let before = table[level - 1];
            spread = [(last[0] - before[0]).abs(), (last[1] - before[1]).abs()];
        }
        best = row[level];
        table.push(best);
        prev_diag = row;
    }
    Ok((best, spread))
}

/// Taylor data of `T1` at `M-` by Richardson-extrapolated central differences.
pub fn extract_taylor(global: &GlobalMapSpec) -> Result<TaylorData> {
    let xp = global.x_plus;
    let ym = global.y_minus;
    let f = |x: f64, eta: f64| -> Result<[f64; 2]> {
        let q = global.eval_at(PlanarPoint::new(x, ym + eta), 0.0)?;
        Ok([q.x - xp, q.y])
    };
    let origin = f(0.0, 0.0)?;
    if origin[0].abs() > 1e-10 || origin[1].abs() > 1e-10 {
        return Err(Error::InvalidParameter("global map does not send M- to M+"));
    }
    let scale = xp.min(ym).min(1.0);
    let get = |nx: usize, ny: usize, which: usize, name: &'static str| -> Result<f64> {
        let (v, s) = partial(&f, nx, ny, scale)?;
        let fact = [1.0, 1.0, 2.0, 6.0];
        let val = v[which] / (fact[nx] * fact[ny]);
        let spread = s[which] / (fact[nx] * fact[ny]);
        if !(spread <= 1e-7 * val.abs().max(1.0)) {
            return Err(Error::IllConditionedExtraction { coefficient: name, spread });
        }
        Ok(val)
    };
    let g_y = get(0, 1, 1, "G_y")?;
    let d = get(0, 2, 1, "d")?;
    if g_y.abs() > 1e-8 || d.abs() < 1e-8 {
        return Err(Error::NotTangency { g_y, d });
    }
    Ok(TaylorData {
        a: get(1, 0, 0, "a")?,
        b: get(0, 1, 0, "b")?,
        c: get(1, 0, 1, "c")?,
        d,
        e20: get(2, 0, 0, "e20")?,
        e11: get(1, 1, 0, "e11")?,
        e02: get(0, 2, 0, "e02")?,
        f20: get(2, 0, 1, "f20")?,
        f11: get(1, 1, 1, "f11")?,
        f30: get(3, 0, 1, "f30")?,
        f21: get(2, 1, 1, "f21")?,
        f12: get(1, 2, 1, "f12")?,
        f03: get(0, 3, 1, "f03")?,
        g_y,
    })
}

/// Invariant audit of a built family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyAudit {
    pub bc_residual: f64,
    pub det_identity_residual: f64,
    pub printed_identity_value: f64,
    pub max_det_residual: f64,
    pub sampled_points: usize,
    pub tangency_g_y: f64,
    pub passed: bool,
}

/// Checks `bc = 1`, the determinant identity, and `|det DT1 + 1|` on `n`
/// low-discrepancy points of `Pi-`.
pub fn audit_family(h: &FamilyHandle, n: usize) -> Result<FamilyAudit> {
    let delta = h.global.window_half_width();
    let mut worst = 0.0f64;
    for (u, v) in halton2(n) {
        let p = PlanarPoint::new((2.0 * u - 1.0) * delta, h.global.y_minus + (2.0 * v - 1.0) * delta);
        let j = h.global.jacobian(p)?;
        worst = worst.max((j.det() + 1.0).abs());
    }
    let t = &h.taylor;
    let bc = t.bc_residual();
    let ident = t.det_identity_residual();
    Ok(FamilyAudit {
        bc_residual: bc,
        det_identity_residual: ident,
        printed_identity_value: t.printed_identity_value(),
        max_det_residual: worst,
        sampled_points: n,
        tangency_g_y: t.g_y,
        passed: bc.abs() <= 1e-10 && ident.abs() <= 1e-8 && worst <= 1e-10,
    })
}

fn rebuild(h: &FamilyHandle, kind: RecipeKind) -> Result<FamilyHandle> {
    let recipe = GlobalRecipe {
        kind,
        x_plus: h.global.x_plus,
        y_minus: h.global.y_minus,
        n0: h.global.n0,
    };
    build_family(h.local.clone(), &recipe, h.global.mu)
}

fn with_c(kind: &RecipeKind, c: f64) -> Result<RecipeKind> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::TargetUnreachable("alpha = -1 needs c = 0"));
    }
    let mut k = kind.clone();
    match &mut k {
        RecipeKind::GeneralizedHenon { p, .. } => {
            if p.coeffs.len() < 2 {
                p.coeffs.resize(2, 0.0);
            }
            p.coeffs[1] = 1.0 / c;
        }
        RecipeKind::ShearSandwich { b, .. } => *b = 1.0 / c,
        RecipeKind::Custom { .. } => return Err(Error::TargetUnreachable("custom recipes expose no knobs")),
    }
    Ok(k)
}

fn shape_knob(kind: &RecipeKind) -> f64 {
    match kind {
        RecipeKind::GeneralizedHenon { p, .. } => p.coeff(2),
        RecipeKind::ShearSandwich { h, .. } => h.coeff(1),
        RecipeKind::Custom { .. } => 0.0,
    }
}

fn with_shape(kind: &RecipeKind, v: f64) -> RecipeKind {
    let mut k = kind.clone();
    match &mut k {
        RecipeKind::GeneralizedHenon { p, .. } => {
            if p.coeffs.len() < 3 {
                p.coeffs.resize(3, 0.0);
            }
            p.coeffs[2] = v;
        }
        RecipeKind::ShearSandwich { h, .. } => {
            if h.coeffs.len() < 2 {
                h.coeffs.resize(2, 0.0);
            }
            h.coeffs[1] = v;
        }
        RecipeKind::Custom { .. } => {}
    }
    k
}

/// Retunes the recipe knobs so that the extracted invariants hit the targets.
///
/// `alpha` is moved with `c` (keeping `b = 1/c`); `s0` with the shape knob:
/// the `eta^2` coefficient of `P` for recipe (i), the linear coefficient of
/// the inner shear for the sandwich.
pub fn tune_to(h: &FamilyHandle, alpha_target: f64, s0_target: f64) -> Result<FamilyHandle> {
    const TOL: f64 = 1e-8;
    if !(alpha_target.is_finite() && s0_target.is_finite()) {
        return Err(Error::InvalidParameter("targets must be finite"));
    }
    let kind = &h.global.recipe;
    if matches!(kind, RecipeKind::Custom { .. }) {
        return Err(Error::TargetUnreachable("custom recipes expose no knobs"));
    }
    if matches!(kind, RecipeKind::GeneralizedHenon { .. }) && s0_target > 0.0 {
        return Err(Error::TargetUnreachable("recipe (i) only realizes s0 <= 0"));
    }
    if matches!(kind, RecipeKind::ShearSandwich { .. }) && s0_target != 0.0 && h.taylor.d == 0.0 {
        return Err(Error::TargetUnreachable("s0 knob inactive"));
    }
    let (xp, ym) = (h.global.x_plus, h.global.y_minus);
    let c_guess = (alpha_target + 1.0) * ym / xp;
    let c0 = h.taylor.c;
    let alpha_err = |c: f64| -> Result<f64> { Ok(rebuild(h, with_c(kind, c)?)?.alpha - alpha_target) };
    let c = if (h.alpha - alpha_target).abs() <= TOL {
        c0
    } else {
        secant(alpha_err, c0, c_guess, TOL, 40).map_err(|e| match e {
            Error::NoConvergence(_) => Error::TargetUnreachable("alpha secant did not converge"),
            other => other,
        })?
    };
    let stage1 = rebuild(h, with_c(kind, c)?)?;
    if (stage1.s0 - s0_target).abs() <= TOL {
        return Ok(stage1);
    }
    let kind1 = stage1.global.recipe.clone();
    let k0 = shape_knob(&kind1);
    let s0_err = |v: f64| -> Result<f64> { Ok(rebuild(&stage1, with_shape(&kind1, v))?.s0 - s0_target) };
    let v = secant(s0_err, k0, k0 + 0.1, TOL, 60).map_err(|e| match e {
        Error::NoConvergence(_) => Error::TargetUnreachable("s0 secant did not converge"),
        other => other,
    })?;
    let out = rebuild(&stage1, with_shape(&kind1, v))?;
    if (out.alpha - alpha_target).abs() > TOL || (out.s0 - s0_target).abs() > TOL {
        return Err(Error::TargetUnreachable("knobs interact beyond tolerance"));
    }
    Ok(out)
}
