//! Numerics for homoclinic tangencies of two-dimensional area-preserving maps
//! whose global part reverses orientation.
//!
//! The crate is `no_std` (it needs `alloc`). Everything is binary64 and every
//! model map is assembled from primitives whose Jacobian determinant is exactly
//! `+1` or `-1`, so conservativity holds by construction rather than by
//! truncation.
//!
//! Layout, bottom up:
//!
//! * [`map`]: planar points, 2x2 Jacobians, exact shear/swap/Moser stages.
//! * [`family`]: saddle map in Moser form, global map recipes, Taylor data,
//!   the `alpha` and `s0` invariants, knob tuning.
//! * [`henon`]: the limit map `x' = y, y' = M + x - y^2`.
//! * [`return_map`]: closed-form powers of the saddle map, first-return maps
//!   `T_k`, strips and horseshoe classification.
//! * [`rescale`]: the linear chain taking `T_k` to the Hénon form.
//! * [`orbit`]: Newton location of fixed points, 2-orbits and bifurcations.
//! * [`atlas`]: cascades, two-parameter strips and resonance certificates.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN falls on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod atlas;
mod error;
pub mod family;
pub mod henon;
pub mod interval;
pub mod map;
pub mod math;
pub mod numeric;
pub mod orbit;
pub mod rescale;
pub mod return_map;

pub use error::{Error, Result};
pub use map::{Jacobian2, MapExpr, Multipliers, PlanarPoint, Poly, Stage};
