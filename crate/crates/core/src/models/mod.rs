//! Concrete symmetric operators with their deficiency data.
//!
//! A model exposes normalized deficiency vectors only through the overlaps
//! `c^{pq}(g) = ⟨U_g φ̂_q, φ̂_p⟩` (inner product linear in the first slot),
//! which is all the extension flow needs, plus conversions between
//! boundary conditions and von Neumann parameters `v` labelling the domain
//! `Dom(Ȧ) ∔ span{φ̂₊ − v φ̂₋}`.

pub mod frobenius;
mod halfline;
mod interval;
mod inverse_square;

pub use halfline::HalflineDerivative;
pub use interval::IntervalDerivative;
pub use inverse_square::InverseSquare;

use num_complex::Complex64;
use serde::Serialize;

use crate::affine::{AffineMap, OneParamSubgroup};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Von Neumann parameter of an extension. `Empty` is the single point of
/// the parameter ball when `N₊ = {0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ContractionParameter {
    Scalar(Complex64),
    Empty,
}

impl ContractionParameter {
    pub fn value(&self) -> Option<Complex64> {
        match self {
            ContractionParameter::Scalar(v) => Some(*v),
            ContractionParameter::Empty => None,
        }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        match self {
            ContractionParameter::Scalar(v) => (v.norm() - 1.0).abs() <= tol,
            ContractionParameter::Empty => false,
        }
    }
}

/// Boundary conditions understood by the models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundaryCondition {
    /// `f(0) = ρ f(ℓ)` on an interval.
    Periodic { rho: Complex64 },
    /// Vanishing of the `x^{1/2−μ}` (or logarithmic) coefficient.
    Friedrichs,
    /// Vanishing of the `x^{1/2+μ}` coefficient.
    Krein,
    /// Self-adjoint family: `(c_lower, c_upper) ∝ (sin Θ, cos Θ)` for
    /// `γ ≥ −1/4`, and `∝ (−e^{−iΘ}, e^{iΘ})` (that is `√x·sin(ν ln x + Θ)`)
    /// for `γ < −1/4`.
    Angle(f64),
    /// `(c_lower, c_upper) ∝ (lower, upper)`.
    Asymptotic { lower: Complex64, upper: Complex64 },
    /// `f(0) = 0` on the half-line; the operator itself.
    Dirichlet,
}

/// Overlap blocks `(C^{pq})_{ij} = ⟨U_g φ̂^q_j, φ̂^p_i⟩`. Blocks touching a
/// trivial deficiency space are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapData {
    pub plus_plus: Option<ComplexMatrix>,
    pub plus_minus: Option<ComplexMatrix>,
    pub minus_plus: Option<ComplexMatrix>,
    pub minus_minus: Option<ComplexMatrix>,
}

impl OverlapData {
    pub fn scalar(cpp: Complex64, cpm: Complex64, cmp: Complex64, cmm: Complex64) -> Self {
        let m = |z| Some(ComplexMatrix::from_diag(&[z]));
        OverlapData {
            plus_plus: m(cpp),
            plus_minus: m(cpm),
            minus_plus: m(cmp),
            minus_minus: m(cmm),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        let np = self.plus_plus.as_ref().map_or(0, ComplexMatrix::rows);
        let nm = self.minus_minus.as_ref().map_or(0, ComplexMatrix::rows);
        (np, nm)
    }

    /// `(c^{++}, c^{+−}, c^{−+}, c^{−−})` in the `(1,1)` case.
    pub fn scalars(&self) -> Result<[Complex64; 4]> {
        let get = |m: &Option<ComplexMatrix>| match m {
            Some(m) if m.rows() == 1 && m.cols() == 1 => Ok(m[(0, 0)]),
            _ => Err(Error::UnsupportedIndices(self.dims().0, self.dims().1)),
        };
        Ok([
            get(&self.plus_plus)?,
            get(&self.plus_minus)?,
            get(&self.minus_plus)?,
            get(&self.minus_minus)?,
        ])
    }
}

/// The contract a symmetric operator model fulfils.
pub trait OperatorModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Short human readable description including parameters.
    fn describe(&self) -> String;

    fn deficiency_dims(&self) -> (usize, usize);

    /// The one-parameter subgroup the flow is studied along.
    fn group(&self) -> OneParamSubgroup;

    /// Whether `U_g` is available for `g`.
    fn admits(&self, g: &AffineMap) -> bool {
        self.group().contains(g, 1e-12)
    }

    fn overlap(&self, g: &AffineMap) -> Result<OverlapData>;

    /// Advertised absolute accuracy of the overlaps.
    fn accuracy(&self) -> f64;

    fn vn_from_boundary(&self, bc: &BoundaryCondition) -> Result<ContractionParameter>;

    fn boundary_from_vn(&self, v: &ContractionParameter) -> Result<BoundaryCondition>;

    /// Squared norms of the unnormalized representatives of `φ₊` and `φ₋`
    /// (`None` for a trivial deficiency space).
    fn representative_norms_sq(&self) -> (Option<f64>, Option<f64>);
}

pub(crate) fn outside_group(g: &AffineMap) -> Error {
    Error::OutsideGroup {
        a: g.slope(),
        b: g.offset(),
    }
}

/// Gram matrix of `{U_g φ̂₊, U_g φ̂₋, φ̂₊, φ̂₋}` for a `(1,1)` model,
/// with entries `G_ij = ⟨w_j, w_i⟩`.
pub fn gram_matrix(model: &dyn OperatorModel, g: &AffineMap) -> Result<ComplexMatrix> {
    let [cpp, cpm, cmp, cmm] = model.overlap(g)?.scalars()?;
    let [epp, epm, emp, emm] = model.overlap(&AffineMap::IDENTITY)?.scalars()?;
    // ⟨φ̂_q, φ̂_p⟩ = e^{pq}; ⟨U φ̂_q, φ̂_p⟩ = c^{pq}; ⟨U φ̂_q, U φ̂_p⟩ = e^{pq}
    let inner = |q: usize, p: usize| -> Complex64 {
        // indices 0: Uφ₊, 1: Uφ₋, 2: φ₊, 3: φ₋
        let sign = |k: usize| k % 2; // 0 plus, 1 minus
        let e = |q: usize, p: usize| match (p, q) {
            (0, 0) => epp,
            (0, 1) => epm,
            (1, 0) => emp,
            _ => emm,
        };
        let c = |q: usize, p: usize| match (p, q) {
            (0, 0) => cpp,
            (0, 1) => cpm,
            (1, 0) => cmp,
            _ => cmm,
        };
        let (uq, up) = (q < 2, p < 2);
        match (uq, up) {
            (true, true) | (false, false) => e(sign(q), sign(p)),
            (true, false) => c(sign(q), sign(p)),
            (false, true) => c(sign(p), sign(q)).conj(),
        }
    };
    Ok(ComplexMatrix::from_fn(4, 4, |i, j| inner(j, i)))
}

/// Builds a model from its CLI name.
pub fn by_name(name: &str, ell: f64, gamma: f64) -> Result<Box<dyn OperatorModel>> {
    match name {
        "interval" => Ok(Box::new(IntervalDerivative::new(ell)?)),
        "inverse-square" => Ok(Box::new(InverseSquare::new(gamma)?)),
        "halfline" => Ok(Box::new(HalflineDerivative::new())),
        other => Err(Error::InvalidArgument(format!(
            "unknown model '{other}' (expected interval, inverse-square or halfline)"
        ))),
    }
}

pub const MODEL_NAMES: [&str; 3] = ["interval", "inverse-square", "halfline"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::is_psd;

    #[test]
    fn unknown_model_rejected() {
        assert!(by_name("torus", 1.0, 0.0).is_err());
        assert_eq!(by_name("interval", 1.0, 0.0).unwrap().name(), "interval");
    }

    #[test]
    fn identity_gram_is_rank_two() {
        let m = IntervalDerivative::new(1.0).unwrap();
        let g = gram_matrix(&m, &AffineMap::IDENTITY).unwrap();
        assert!(is_psd(&g, 1e-10));
        // U_e φ = φ, so rows 0 and 2 coincide
        for j in 0..4 {
            assert!((g[(0, j)] - g[(2, j)]).norm() < 1e-14);
        }
    }
}
