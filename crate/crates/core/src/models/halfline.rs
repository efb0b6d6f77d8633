//! `i d/dx` on `(0, ∞)` with `f(0) = 0`. Deficiency indices `(0, 1)`, so
//! the operator is already maximal dissipative and the parameter ball is a
//! single point.
//!
//! The whole affine group acts by `(U_g f)(x) = a^{−1/2} e^{ibx/a} f(x/a)`.

use num_complex::Complex64;

use super::{BoundaryCondition, ContractionParameter, OperatorModel, OverlapData};
use crate::affine::{AffineMap, OneParamSubgroup};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct HalflineDerivative;

impl HalflineDerivative {
    pub fn new() -> Self {
        HalflineDerivative
    }

    /// `⟨U_g φ̂₋, φ̂₋⟩` with `φ̂₋ = √2 e^{−x}`.
    pub fn minus_overlap(g: &AffineMap) -> Complex64 {
        let (a, b) = (g.slope(), g.offset());
        2.0 * a.sqrt() / Complex64::new(a + 1.0, -b)
    }
}

impl OperatorModel for HalflineDerivative {
    fn name(&self) -> &'static str {
        "halfline"
    }

    fn describe(&self) -> String {
        "i d/dx on (0, inf) with f(0) = 0".to_string()
    }

    fn deficiency_dims(&self) -> (usize, usize) {
        (0, 1)
    }

    fn group(&self) -> OneParamSubgroup {
        OneParamSubgroup::TRANSLATIONS
    }

    fn admits(&self, _g: &AffineMap) -> bool {
        true
    }

    fn overlap(&self, g: &AffineMap) -> Result<OverlapData> {
        Ok(OverlapData {
            plus_plus: None,
            plus_minus: None,
            minus_plus: None,
            minus_minus: Some(ComplexMatrix::from_diag(&[Self::minus_overlap(g)])),
        })
    }

    fn accuracy(&self) -> f64 {
        1e-15
    }

    fn vn_from_boundary(&self, bc: &BoundaryCondition) -> Result<ContractionParameter> {
        match bc {
            BoundaryCondition::Dirichlet => Ok(ContractionParameter::Empty),
            other => Err(Error::InvalidBoundary(format!(
                "the half-line operator has no extensions besides itself, got {other:?}"
            ))),
        }
    }

    fn boundary_from_vn(&self, v: &ContractionParameter) -> Result<BoundaryCondition> {
        match v {
            ContractionParameter::Empty => Ok(BoundaryCondition::Dirichlet),
            ContractionParameter::Scalar(_) => Err(Error::InvalidBoundary(
                "the half-line parameter ball is a single point".into(),
            )),
        }
    }

    fn representative_norms_sq(&self) -> (Option<f64>, Option<f64>) {
        (None, Some(0.5))
    }
}
