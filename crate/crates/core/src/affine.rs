//! The orientation-preserving affine group of the real line ("ax+b" group),
//! its one-parameter subgroups, and the flow coefficients attached to a group
//! element.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// An orientation-preserving affine map `x ↦ a·x + b` with `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    a: f64,
    b: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { a: 1.0, b: 0.0 };

    /// Panics if `a` is not a positive finite number or `b` is not finite.
    pub fn new(a: f64, b: f64) -> Self {
        assert!(a > 0.0 && a.is_finite(), "affine slope must be positive, got {a}");
        assert!(b.is_finite(), "affine offset must be finite, got {b}");
        AffineMap { a, b }
    }

    pub fn translation(b: f64) -> Self {
        AffineMap::new(1.0, b)
    }

    pub fn scaling(a: f64) -> Self {
        AffineMap::new(a, 0.0)
    }

    pub fn slope(&self) -> f64 {
        self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }

    pub fn is_identity(&self) -> bool {
        self.a == 1.0 && self.b == 0.0
    }

    /// `(self ∘ g)(x) = self(g(x))`.
    pub fn compose(&self, g: &AffineMap) -> AffineMap {
        AffineMap {
            a: self.a * g.a,
            b: self.a.mul_add(g.b, self.b),
        }
    }

    pub fn inverse(&self) -> AffineMap {
        AffineMap {
            a: 1.0 / self.a,
            b: -self.b / self.a,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        z * self.a + self.b
    }

    pub fn apply_real(&self, x: f64) -> f64 {
        self.a.mul_add(x, self.b)
    }

    pub fn fixed_point(&self) -> FixedPoint {
        if self.a == 1.0 {
            if self.b == 0.0 {
                FixedPoint::AllPoints
            } else {
                FixedPoint::Absent
            }
        } else {
            FixedPoint::Point(self.b / (1.0 - self.a))
        }
    }

    /// Coefficients `α = g⁻¹(i)+i`, `β = g⁻¹(−i)+i`, `γ = g⁻¹(i)−i`,
    /// `δ = g⁻¹(−i)−i` entering the flow formula.
    pub fn flow_coefficients(&self) -> FlowCoefficients {
        let inv = self.inverse();
        let up = inv.apply(I);
        let down = inv.apply(-I);
        FlowCoefficients {
            alpha: up + I,
            beta: down + I,
            gamma_c: up - I,
            delta: down - I,
        }
    }

    /// Componentwise distance `max(|Δa|, |Δb|)`.
    pub fn distance(&self, other: &AffineMap) -> f64 {
        (self.a - other.a).abs().max((self.b - other.b).abs())
    }
}

impl Default for AffineMap {
    fn default() -> Self {
        AffineMap::IDENTITY
    }
}

/// Fixed-point structure of an affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FixedPoint {
    Point(f64),
    Absent,
    AllPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma_c: Complex64,
    pub delta: Complex64,
}

/// The two kinds of continuous one-parameter subgroups of the affine group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OneParamSubgroup {
    /// `g_t(x) = x + v·t`.
    Translation { speed: f64 },
    /// `g_t(x) = base^t·(x − center) + center`.
    Scaling { base: f64, center: f64 },
}

impl OneParamSubgroup {
    /// Unit-speed translations `x ↦ x + t`.
    pub const TRANSLATIONS: OneParamSubgroup = OneParamSubgroup::Translation { speed: 1.0 };
    /// Dilations `x ↦ e^t x` about the origin.
    pub const DILATIONS: OneParamSubgroup = OneParamSubgroup::Scaling {
        base: std::f64::consts::E,
        center: 0.0,
    };

    pub fn eval(&self, t: f64) -> AffineMap {
        match *self {
            OneParamSubgroup::Translation { speed } => AffineMap::new(1.0, speed * t),
            OneParamSubgroup::Scaling { base, center } => {
                let log_a = t * base.ln();
                // offset = center·(1 − a^t) without cancellation for small t
                AffineMap::new(log_a.exp(), center * -log_a.exp_m1())
            }
        }
    }

    /// Group parameter `t` of `g` if `g` lies on this subgroup (within `tol`).
    pub fn parameter_of(&self, g: &AffineMap, tol: f64) -> Option<f64> {
        let t = match *self {
            OneParamSubgroup::Translation { speed } => {
                if speed == 0.0 {
                    return None;
                }
                g.offset() / speed
            }
            OneParamSubgroup::Scaling { base, .. } => g.slope().ln() / base.ln(),
        };
        (self.eval(t).distance(g) <= tol * (1.0 + g.offset().abs())).then_some(t)
    }

    pub fn contains(&self, g: &AffineMap, tol: f64) -> bool {
        self.parameter_of(g, tol).is_some()
    }

    /// `g_t(0)` and `g_t'(0)` as used by the generalized Weyl relations.
    pub fn weyl_data(&self, t: f64) -> (f64, f64) {
        let g = self.eval(t);
        (g.offset(), g.slope())
    }

    pub fn is_translation(&self) -> bool {
        matches!(self, OneParamSubgroup::Translation { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            OneParamSubgroup::Translation { .. } => "translation",
            OneParamSubgroup::Scaling { .. } => "scaling",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn close(z: Complex64, w: Complex64, tol: f64) -> bool {
        (z - w).norm() <= tol
    }

    #[test]
    fn compose_examples() {
        let g = AffineMap::new(2.0, 1.0).compose(&AffineMap::new(1.0, 3.0));
        assert_eq!(g, AffineMap::new(2.0, 7.0));
        let h = AffineMap::new(2.5, -1.5);
        assert_eq!(h.compose(&AffineMap::IDENTITY), h);
        assert_eq!(
            AffineMap::new(0.5, 0.0).compose(&AffineMap::new(2.0, 0.0)),
            AffineMap::IDENTITY
        );
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(AffineMap::new(2.0, 1.0).inverse(), AffineMap::new(0.5, -0.5));
        assert_eq!(AffineMap::IDENTITY.inverse(), AffineMap::IDENTITY);
        assert_eq!(AffineMap::new(1.0, 5.0).inverse(), AffineMap::new(1.0, -5.0));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(AffineMap::new(2.0, 1.0).apply(I), Complex64::new(1.0, 2.0));
        assert_eq!(AffineMap::new(1.0, -3.0).apply(Complex64::new(0.0, 0.0)), Complex64::new(-3.0, 0.0));
        assert_eq!(AffineMap::new(2.0, 0.0).inverse().apply(I), Complex64::new(0.0, 0.5));
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(AffineMap::new(2.0, -1.0).fixed_point(), FixedPoint::Point(1.0));
        assert_eq!(AffineMap::new(1.0, 3.0).fixed_point(), FixedPoint::Absent);
        assert_eq!(AffineMap::IDENTITY.fixed_point(), FixedPoint::AllPoints);
    }

    #[test]
    fn subgroup_examples() {
        assert_eq!(OneParamSubgroup::TRANSLATIONS.eval(2.0), AffineMap::new(1.0, 2.0));
        let s = OneParamSubgroup::Scaling { base: 2.0, center: 1.0 }.eval(1.0);
        assert!((s.slope() - 2.0).abs() < 1e-15 && (s.offset() + 1.0).abs() < 1e-15);
        let d = OneParamSubgroup::DILATIONS.eval(1.0);
        assert!((d.slope() - E).abs() < 1e-15 && d.offset() == 0.0);
        for g in [OneParamSubgroup::TRANSLATIONS, OneParamSubgroup::DILATIONS] {
            assert_eq!(g.eval(0.0), AffineMap::IDENTITY);
        }
    }

    #[test]
    fn flow_coefficient_examples() {
        let c = AffineMap::IDENTITY.flow_coefficients();
        assert_eq!((c.alpha, c.beta, c.gamma_c, c.delta), (2.0 * I, 0.0 * I, 0.0 * I, -2.0 * I));

        let b = 0.7;
        let c = AffineMap::translation(b).flow_coefficients();
        assert!(close(c.alpha, 2.0 * I - b, 1e-15));
        assert!(close(c.beta, Complex64::new(-b, 0.0), 1e-15));
        assert!(close(c.gamma_c, Complex64::new(-b, 0.0), 1e-15));
        assert!(close(c.delta, -2.0 * I - b, 1e-15));

        let c = AffineMap::scaling(2.0).flow_coefficients();
        assert!(close(c.alpha, 1.5 * I, 1e-15));
        assert!(close(c.beta, 0.5 * I, 1e-15));
        assert!(close(c.gamma_c, -0.5 * I, 1e-15));
        assert!(close(c.delta, -1.5 * I, 1e-15));
    }

    fn map() -> impl Strategy<Value = AffineMap> {
        (0.1f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| AffineMap::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn group_laws(f in map(), g in map(), h in map()) {
            let lhs = f.compose(&g).compose(&h);
            let rhs = f.compose(&g.compose(&h));
            prop_assert!(lhs.distance(&rhs) <= 1e-13 * (1.0 + lhs.offset().abs()));
            prop_assert!(f.compose(&AffineMap::IDENTITY).distance(&f) <= 1e-13);
            prop_assert!(AffineMap::IDENTITY.compose(&f).distance(&f) <= 1e-13);
            prop_assert!(f.compose(&f.inverse()).distance(&AffineMap::IDENTITY) <= 1e-13);
            prop_assert!(f.inverse().compose(&f).distance(&AffineMap::IDENTITY) <= 1e-13);
        }

        #[test]
        fn coefficient_identities(g in map()) {
            let c = g.flow_coefficients();
            prop_assert!(close(c.alpha - c.gamma_c, 2.0 * I, 1e-14));
            prop_assert!(close(c.delta - c.beta, -2.0 * I, 1e-14));
            prop_assert!(c.alpha.norm() > 0.0);
            prop_assert_eq!(c.alpha, g.inverse().apply(I) + I);
        }

        #[test]
        fn subgroup_homomorphism(s in -3.0f64..3.0, t in -3.0f64..3.0,
                                 base in 0.2f64..5.0, center in -4.0f64..4.0, v in -3.0f64..3.0) {
            prop_assume!((base - 1.0).abs() > 1e-3);
            for grp in [OneParamSubgroup::Scaling { base, center }, OneParamSubgroup::Translation { speed: v }] {
                let lhs = grp.eval(s).compose(&grp.eval(t));
                let rhs = grp.eval(s + t);
                let scale = 1.0 + rhs.offset().abs() + rhs.slope();
                prop_assert!(lhs.distance(&rhs) <= 1e-13 * scale);
            }
        }
    }
}
