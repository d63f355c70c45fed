use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the numerical core can report.
///
/// Variants are grouped loosely into input validation (the caller asked for
/// something meaningless) and numerical failure (the question was fine but the
/// computation could not answer it). [`Error::is_validation`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Error {
    #[error("orbit escaped at stage {stage}")]
    Escaped { stage: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("not a tangency: G_y(0) = {g_y:e}, d = {d:e}")]
    NotTangency { g_y: f64, d: f64 },
    #[error("orientable global map: {swaps} swap stages")]
    OrientableGlobalMap { swaps: usize },
    #[error("ill-conditioned extraction of {coefficient}: Richardson spread {spread:e}")]
    IllConditionedExtraction { coefficient: &'static str, spread: f64 },
    #[error("target unreachable: {0}")]
    TargetUnreachable(&'static str),
    #[error("no real orbit at M = {m}")]
    NoRealOrbit { m: f64 },
    #[error("resonant parameter M = {m}")]
    Resonant { m: f64 },
    #[error("cross-form solve failed at k = {k}")]
    CrossFormSolveFailed { k: u32 },
    #[error("strip outside window: k = {k} below k_min = {k_min}")]
    StripOutsideWindow { k: u32, k_min: u32 },
    #[error("k = {k} outside the usable range {k_min}..={k_max}")]
    KOutOfRange { k: u32, k_min: u32, k_max: u32 },
    #[error("inconclusive horseshoe classification at k = {k}")]
    Inconclusive { k: u32 },
    #[error("Newton diverged")]
    NewtonDiverged,
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("2-orbit collapsed to a fixed point")]
    CollapsedToFixedPoint,
    #[error("bracket failed: no sign change on [{lo}, {hi}]")]
    BracketFailed { lo: f64, hi: f64 },
    #[error("orbit is not elliptic (trace {trace})")]
    NotElliptic { trace: f64 },
    #[error("precision floor reached converting mu at k = {k}")]
    PrecisionFloor { k: u32 },
    #[error("s0 = {s0} not in the resonance window (-1, 0)")]
    NotInResonanceWindow { s0: f64 },
    #[error("family is not at global resonance (alpha = {alpha:e})")]
    NotAtResonance { alpha: f64 },
    #[error("iteration limit reached in {0}")]
    NoConvergence(&'static str),
}

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::NotTangency { .. }
                | Error::OrientableGlobalMap { .. }
                | Error::TargetUnreachable(_)
                | Error::StripOutsideWindow { .. }
                | Error::KOutOfRange { .. }
                | Error::NotInResonanceWindow { .. }
                | Error::NotAtResonance { .. }
                | Error::Resonant { .. }
                | Error::NoRealOrbit { .. }
        )
    }
}
