//! Planar map primitives with exact Jacobian determinants.
//!
//! A [`MapExpr`] is an ordered list of [`Stage`]s. Each stage has determinant
//! exactly `+1`, except [`Stage::Swap`] which has `-1`, so a composition is
//! conservative to roundoff no matter how nonlinear the stages are.

use alloc::vec::Vec;
use core::ops::Mul;

use crate::math;
use crate::{Error, Result};

/// Orbits leaving `|x| + |y| <= ESCAPE_RADIUS` are reported as escaped.
pub const ESCAPE_RADIUS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, other: Self) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Jacobian2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Jacobian2 {
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn apply(&self, v: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian);
        }
        Ok(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Eigenvalues, computed from trace and determinant.
    pub fn multipliers(&self) -> Multipliers {
        Multipliers::from_trace_det(self.trace(), self.det())
    }
}

impl Mul for Jacobian2 {
    type Output = Jacobian2;

    fn mul(self, o: Jacobian2) -> Jacobian2 {
        Jacobian2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// Eigenvalues of a real 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum Multipliers {
    /// Real pair, larger modulus first.
    Real { first: f64, second: f64 },
    /// Complex-conjugate pair `re ± i·im`, `im > 0`.
    Complex { re: f64, im: f64 },
}

impl Multipliers {
    pub fn from_trace_det(trace: f64, det: f64) -> Self {
        let disc = trace * trace - 4.0 * det;
        if disc >= 0.0 {
            let s = math::sqrt(disc);
            let big = 0.5 * (trace + if trace >= 0.0 { s } else { -s });
            let small = if big != 0.0 { det / big } else { 0.5 * (trace - s) };
            Multipliers::Real { first: big, second: small }
        } else {
            Multipliers::Complex { re: 0.5 * trace, im: 0.5 * math::sqrt(-disc) }
        }
    }

    pub fn product(&self) -> f64 {
        match *self {
            Multipliers::Real { first, second } => first * second,
            Multipliers::Complex { re, im } => re * re + im * im,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Multipliers::Complex { .. })
    }
}

/// Dense polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self { coeffs: c.to_vec() }
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * t + i as f64 * c;
        }
        acc
    }

    pub fn eval_second(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().skip(2).rev() {
            acc = acc * t + (i * (i - 1)) as f64 * c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Poly::default();
        }
        let mut out = alloc::vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// One exact primitive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "stage", rename_all = "kebab-case"))]
pub enum Stage {
    /// `(x, y) -> (x + g(y), y)`
    VerticalShear { g: Poly },
    /// `(x, y) -> (x, y + h(x))`
    HorizontalShear { h: Poly },
    /// `(x, y) -> (y, x)`, the only orientation-reversing stage.
    Swap,
    /// `(x, y) -> (x + dx, y + dy)`
    Translate { dx: f64, dy: f64 },
    /// `(x, y) -> (lambda x, y / lambda)`
    Diagonal { lambda: f64 },
    /// `(x, y) -> (lambda x B(xy), y / (lambda B(xy)))`, `B(0) = 1`.
    Moser { lambda: f64, b: Poly },
    /// `(x, y) -> (P(x), y / P'(x))`, a point transformation lifted to the
    /// plane. Needed for global maps of the form `x/P'(eta)`.
    PointLift { p: Poly },
}

impl Stage {
    pub fn det_sign(&self) -> f64 {
        if matches!(self, Stage::Swap) {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, p: PlanarPoint) -> PlanarPoint {
        let PlanarPoint { x, y } = p;
        match self {
            Stage::VerticalShear { g } => PlanarPoint::new(x + g.eval(y), y),
            Stage::HorizontalShear { h } => PlanarPoint::new(x, y + h.eval(x)),
            Stage::Swap => PlanarPoint::new(y, x),
            Stage::Translate { dx, dy } => PlanarPoint::new(x + dx, y + dy),
            Stage::Diagonal { lambda } => PlanarPoint::new(lambda * x, y / lambda),
            Stage::Moser { lambda, b } => {
                let bu = b.eval(x * y);
                PlanarPoint::new(lambda * x * bu, y / (lambda * bu))
            }
            Stage::PointLift { p } => PlanarPoint::new(p.eval(x), y / p.eval_deriv(x)),
        }
    }

    pub fn jacobian(&self, p: PlanarPoint) -> Jacobian2 {
        let PlanarPoint { x, y } = p;
        match self {
            Stage::VerticalShear { g } => Jacobian2::new(1.0, g.eval_deriv(y), 0.0, 1.0),
            Stage::HorizontalShear { h } => Jacobian2::new(1.0, 0.0, h.eval_deriv(x), 1.0),
            Stage::Swap => Jacobian2::new(0.0, 1.0, 1.0, 0.0),
            Stage::Translate { .. } => Jacobian2::IDENTITY,
            Stage::Diagonal { lambda } => Jacobian2::new(*lambda, 0.0, 0.0, 1.0 / lambda),
            Stage::Moser { lambda, b } => {
                let u = x * y;
                let bu = b.eval(u);
                let db = b.eval_deriv(u);
                let l = *lambda;
                Jacobian2::new(
                    l * (bu + u * db),
                    l * x * x * db,
                    -y * y * db / (l * bu * bu),
                    (bu - u * db) / (l * bu * bu),
                )
            }
            Stage::PointLift { p } => {
                let dp = p.eval_deriv(x);
                let ddp = p.eval_second(x);
                Jacobian2::new(dp, 0.0, -y * ddp / (dp * dp), 1.0 / dp)
            }
        }
    }
}

/// Composition of stages, applied first to last.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapExpr {
    pub stages: Vec<Stage>,
}

fn escaped(p: PlanarPoint) -> bool {
    !p.is_finite() || p.x.abs() + p.y.abs() > ESCAPE_RADIUS
}

impl MapExpr {
    pub fn new(stages: Vec<Stage>) -> Self {
        Self { stages }
    }

    pub fn then(mut self, other: &MapExpr) -> Self {
        self.stages.extend(other.stages.iter().cloned());
        self
    }

    pub fn swap_count(&self) -> usize {
        self.stages.iter().filter(|s| matches!(s, Stage::Swap)).count()
    }

    /// `(-1)^(number of swaps)`.
    pub fn expected_det(&self) -> f64 {
        if self.swap_count() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn eval(&self, p: PlanarPoint) -> Result<PlanarPoint> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter("point not finite"));
        }
        let mut q = p;
        for (i, s) in self.stages.iter().enumerate() {
            q = s.eval(q);
            if escaped(q) {
                return Err(Error::Escaped { stage: i });
            }
        }
        Ok(q)
    }

    pub fn eval_with_jacobian(&self, p: PlanarPoint) -> Result<(PlanarPoint, Jacobian2)> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter("point not finite"));
        }
        let mut q = p;
        let mut j = Jacobian2::IDENTITY;
        for (i, s) in self.stages.iter().enumerate() {
            j = s.jacobian(q) * j;
            q = s.eval(q);
            if escaped(q) {
                return Err(Error::Escaped { stage: i });
            }
        }
        Ok((q, j))
    }

    pub fn jacobian(&self, p: PlanarPoint) -> Result<Jacobian2> {
        self.eval_with_jacobian(p).map(|(_, j)| j)
    }

    pub fn iterate(&self, p: PlanarPoint, k: usize) -> Result<PlanarPoint> {
        let mut q = p;
        for _ in 0..k {
            q = self.eval(q)?;
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn moser() -> MapExpr {
        MapExpr::new(vec![Stage::Moser { lambda: 0.5, b: Poly::from_slice(&[1.0, 1.0]) }])
    }

    #[test]
    fn swap_and_diagonal() {
        let s = MapExpr::new(vec![Stage::Swap]);
        assert_eq!(s.eval(PlanarPoint::new(1.0, 2.0)).unwrap(), PlanarPoint::new(2.0, 1.0));
        assert_eq!(s.jacobian(PlanarPoint::new(3.0, -1.0)).unwrap(), Jacobian2::new(0.0, 1.0, 1.0, 0.0));
        let d = MapExpr::new(vec![Stage::Diagonal { lambda: 0.5 }]);
        assert_eq!(d.eval(PlanarPoint::new(1.0, 1.0)).unwrap(), PlanarPoint::new(0.5, 2.0));
        assert_eq!(d.iterate(PlanarPoint::new(8.0, 1.0), 3).unwrap(), PlanarPoint::new(1.0, 8.0));
    }

    #[test]
    fn moser_hand_value() {
        let q = moser().eval(PlanarPoint::new(1.0, 1.0)).unwrap();
        assert_eq!(q, PlanarPoint::new(1.0, 1.0));
    }

    #[test]
    fn vertical_shear_jacobian() {
        let m = MapExpr::new(vec![Stage::VerticalShear { g: Poly::from_slice(&[0.0, 0.0, 1.0]) }]);
        let j = m.jacobian(PlanarPoint::new(0.0, 1.0)).unwrap();
        assert_eq!(j, Jacobian2::new(1.0, 2.0, 0.0, 1.0));
        assert_eq!(j.det(), 1.0);
    }

    #[test]
    fn iterate_zero_is_identity() {
        let p = PlanarPoint::new(0.3, -0.7);
        assert_eq!(moser().iterate(p, 0).unwrap(), p);
    }

    #[test]
    fn escape_reports_stage() {
        let m = MapExpr::new(vec![Stage::Translate { dx: 0.0, dy: 0.0 }, Stage::Diagonal { lambda: 1e-9 }]);
        assert_eq!(m.eval(PlanarPoint::new(1.0, 1.0)), Err(Error::Escaped { stage: 1 }));
    }

    #[test]
    fn multipliers_of_rotation_and_saddle() {
        let r = Jacobian2::new(0.0, -1.0, 1.0, 0.0).multipliers();
        assert_eq!(r, Multipliers::Complex { re: 0.0, im: 1.0 });
        match Jacobian2::new(2.0, 0.0, 0.0, -0.5).multipliers() {
            Multipliers::Real { first, second } => {
                assert!((first * second + 1.0).abs() < 1e-15);
                assert!(first.abs() > second.abs());
            }
            other => panic!("{other:?}"),
        }
    }
}
