//! Extension flows of symmetric operators that are covariant under the affine
//! group of the line.
//!
//! The crate computes the action `Γ_g` that a group element induces on the
//! von Neumann parameters of a symmetric operator with deficiency indices
//! `(1,1)`, locates its fixed points (invariant self-adjoint and dissipative
//! extensions) and checks restricted Weyl commutation relations on grids.

// `!(x > 0.0)` style tests are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod error;
pub mod flow;
pub mod mobius;
pub mod models;
pub mod numerics;
pub mod spectra;
pub mod suite;
pub mod weylcheck;

pub use affine::{AffineMap, FixedPoint, FlowCoefficients, OneParamSubgroup};
pub use error::{Error, Result};
pub use mobius::{LinearFractionalMap, MapClass, MapTag};
pub use num_complex::Complex64;
