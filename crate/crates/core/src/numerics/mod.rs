//! Numerical kernels: dense complex matrices, linear solves, the matrix
//! exponential, adaptive quadrature, an embedded Runge–Kutta integrator and
//! bracketed root finding.

pub mod expm;
pub mod linalg;
pub mod matrix;
pub mod ode;
pub mod quad;
pub mod roots;

pub use expm::mat_exp;
pub use linalg::{is_psd, operator_norm, solve_linear, LuDecomposition};
pub use matrix::{vec_norm, ComplexMatrix};
pub use ode::{ode_solve, ode_solve_at, OdeOptions, OdeSolution};
pub use quad::{quad_finite, quad_semiinf, quad_semiinf_from, QuadratureResult};
pub use roots::{find_root, golden_min};
