//! Volume preserving curve shortening flow for closed planar polylines, with
//! the diagnostics used to study it: monotone quantities, Gaussian densities,
//! parabolic blowups, and curvature integrals over surfaces of revolution.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
mod linalg;
pub mod quadrature;
pub mod scenario;
mod spline;
pub mod trilobite;

pub use error::{Error, FlowError, Result};
pub use flow::{FlowConfig, FlowHistory, FlowMode, Multiplier, Snapshot, StepRecord};
pub use geometry::{build_cache, ClosedCurve, GeoCache, Point, TouchReport};
