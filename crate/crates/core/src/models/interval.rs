//! `i d/dx` on `(0, ℓ)` with Dirichlet conditions at both ends, covariant
//! under translations through `(U_t f)(x) = e^{ixt} f(x)`.
//!
//! Representatives `φ₊ = e^x`, `φ₋ = e^{−x}`; all overlaps are closed form.

use num_complex::Complex64;

use super::{outside_group, BoundaryCondition, ContractionParameter, OperatorModel, OverlapData};
use crate::affine::{AffineMap, OneParamSubgroup};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IntervalDerivative {
    ell: f64,
    norm_plus: f64,
    norm_minus: f64,
}

/// `(e^{zℓ} − 1)/z`, accurate for small `|zℓ|`.
fn exp_integral(z: Complex64, ell: f64) -> Complex64 {
    let w = z * ell;
    if w.norm() < 1e-3 {
        // Taylor series of (e^w − 1)/w
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..12 {
            term *= w / k as f64;
            sum += term;
        }
        return sum * ell;
    }
    let e = if w.re == 0.0 {
        // e^{iθ} − 1 without cancellation
        let h = 0.5 * w.im;
        Complex64::new(-2.0 * h.sin() * h.sin(), w.im.sin())
    } else {
        w.exp() - 1.0
    };
    e / z
}

impl IntervalDerivative {
    pub fn new(ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidArgument(format!("interval length must be positive, got {ell}")));
        }
        Ok(IntervalDerivative {
            ell,
            norm_plus: (0.5 * (2.0 * ell).exp_m1()).sqrt(),
            norm_minus: (-0.5 * (-2.0 * ell).exp_m1()).sqrt(),
        })
    }

    pub fn length(&self) -> f64 {
        self.ell
    }

    /// Normalized deficiency vectors `(φ̂₊(x), φ̂₋(x))`.
    pub fn deficiency_vectors(&self, x: f64) -> (f64, f64) {
        (x.exp() / self.norm_plus, (-x).exp() / self.norm_minus)
    }

    /// Overlaps for the translation `x ↦ x + t`.
    pub fn overlaps_at(&self, t: f64) -> [Complex64; 4] {
        let l = self.ell;
        let (np, nm) = (self.norm_plus, self.norm_minus);
        let cpp = exp_integral(Complex64::new(2.0, t), l) / (np * np);
        let cross = exp_integral(Complex64::new(0.0, t), l) / (np * nm);
        let cmm = exp_integral(Complex64::new(-2.0, t), l) / (nm * nm);
        [cpp, cross, cross, cmm]
    }
}

impl OperatorModel for IntervalDerivative {
    fn name(&self) -> &'static str {
        "interval"
    }

    fn describe(&self) -> String {
        format!("i d/dx on (0, {}) with Dirichlet conditions", self.ell)
    }

    fn deficiency_dims(&self) -> (usize, usize) {
        (1, 1)
    }

    fn group(&self) -> OneParamSubgroup {
        OneParamSubgroup::TRANSLATIONS
    }

    fn admits(&self, g: &AffineMap) -> bool {
        g.slope() == 1.0
    }

    fn overlap(&self, g: &AffineMap) -> Result<OverlapData> {
        if !self.admits(g) {
            return Err(outside_group(g));
        }
        let [a, b, c, d] = self.overlaps_at(g.offset());
        Ok(OverlapData::scalar(a, b, c, d))
    }

    fn accuracy(&self) -> f64 {
        1e-14
    }

    fn vn_from_boundary(&self, bc: &BoundaryCondition) -> Result<ContractionParameter> {
        let BoundaryCondition::Periodic { rho } = *bc else {
            return Err(Error::InvalidBoundary(format!("interval model expects f(0) = ρ f(ℓ), got {bc:?}")));
        };
        if rho.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidBoundary(format!("|ρ| = {} exceeds 1", rho.norm())));
        }
        // with w = v‖φ₊‖/‖φ₋‖: 1 − w = ρ(e^ℓ − w e^{−ℓ})
        let (el, eml) = (self.ell.exp(), (-self.ell).exp());
        let w = (1.0 - rho * el) / (1.0 - rho * eml);
        Ok(ContractionParameter::Scalar(w * self.norm_minus / self.norm_plus))
    }

    fn boundary_from_vn(&self, v: &ContractionParameter) -> Result<BoundaryCondition> {
        let v = v
            .value()
            .ok_or_else(|| Error::InvalidBoundary("interval model has a nontrivial parameter ball".into()))?;
        let w = v * self.norm_plus / self.norm_minus;
        let (el, eml) = (self.ell.exp(), (-self.ell).exp());
        Ok(BoundaryCondition::Periodic {
            rho: (1.0 - w) / (el - w * eml),
        })
    }

    fn representative_norms_sq(&self) -> (Option<f64>, Option<f64>) {
        (Some(self.norm_plus.powi(2)), Some(self.norm_minus.powi(2)))
    }
}
