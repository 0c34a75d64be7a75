//! Shared numerical kernels.

pub mod bessel;
pub mod erf;
pub mod quad;
pub mod regression;

pub use bessel::i0e;
pub use erf::{erf, erfc};
pub use quad::{quad_adaptive, quad_breakpoints, Quadrature, QuadratureSpec};
pub use regression::tail_slope;
