//! `τ = −d²/dx² + γ/x²` on `(0, ∞)`, `γ < 3/4`, covariant under dilations.
//!
//! For `g = (a, 0)` the representation is `(U_g f)(x) = a^{−1/4} f(a^{−1/2} x)`,
//! so that `U_g τ U_g* = a τ`.
//!
//! `φ₊` is the solution of `τf = i f` decaying at infinity, fixed in the
//! gauge `φ₊(x) ~ e^{−κx}`, `κ = e^{−iπ/4}`; `φ₋ = conj(φ₊)`. It is built
//! from three pieces:
//! * the Frobenius series below `X_JOIN`, with coefficients matched to the
//!   numerical solution there;
//! * a backward Dormand–Prince integration from `X_FAR` stored on a uniform
//!   grid and read back by quintic Hermite interpolation;
//! * the large-argument asymptotic series beyond `X_FAR`, which also
//!   supplies the initial data.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::frobenius::FrobeniusBasis;
use super::{outside_group, BoundaryCondition, ContractionParameter, OperatorModel, OverlapData};
use crate::affine::{AffineMap, OneParamSubgroup};
use crate::error::{Error, Result};
use crate::numerics::{ode_solve_at, quad_semiinf, quad_semiinf_from, OdeOptions};

const X_JOIN: f64 = 0.5;
const X_FAR: f64 = 40.0;
const NODE_SPACING: f64 = 0.01;
const ODE_TOL: f64 = 1e-13;
const QUAD_TOL: f64 = 1e-12;
/// Below this relative size a local coefficient counts as zero when naming
/// a boundary condition.
const TAG_TOL: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct InverseSquare {
    gamma: f64,
    basis: FrobeniusBasis,
    kappa: Complex64,
    /// `(f, f')` of the unnormalized `φ₊` at `X_JOIN + k·h`.
    table: Vec<[Complex64; 2]>,
    spacing: f64,
    /// Local coefficients of the unnormalized `φ₊`.
    c_lower: Complex64,
    c_upper: Complex64,
    asym: Vec<Complex64>,
    norm: f64,
}

impl InverseSquare {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma < 0.75) || !gamma.is_finite() {
            return Err(Error::IllPosed(format!(
                "deficiency indices are (1,1) only for γ < 3/4, got γ = {gamma}"
            )));
        }
        let basis = FrobeniusBasis::new(gamma, I);
        let kappa = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);

        // a_k(μ) = Π (4μ² − (2j−1)²) / (k! 8^k), pre-divided by κ^k
        let four_mu2 = 4.0 * gamma + 1.0;
        let mut asym = vec![Complex64::new(1.0, 0.0)];
        for k in 1..60 {
            let kf = k as f64;
            let prev = asym[k - 1];
            let next = prev * (four_mu2 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf) / kappa;
            if next.norm() == 0.0 {
                break;
            }
            asym.push(next);
        }

        let mut model = InverseSquare {
            gamma,
            basis,
            kappa,
            table: Vec::new(),
            spacing: 0.0,
            c_lower: Complex64::new(0.0, 0.0),
            c_upper: Complex64::new(0.0, 0.0),
            asym,
            norm: 1.0,
        };

        let n_nodes = ((X_FAR - X_JOIN) / NODE_SPACING).round() as usize + 1;
        let spacing = (X_FAR - X_JOIN) / (n_nodes - 1) as f64;
        let nodes: Vec<f64> = (0..n_nodes).rev().map(|k| X_JOIN + k as f64 * spacing).collect();
        let (f0, df0) = model.asymptotic(X_FAR);
        let rhs = move |x: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = y[1];
            dy[1] = (gamma / (x * x) - I) * y[0];
        };
        let opts = OdeOptions {
            max_step: 0.5,
            ..OdeOptions::default()
        };
        let states = ode_solve_at(rhs, X_FAR, &[f0, df0], &nodes, ODE_TOL, &opts)?;
        model.table = states.into_iter().rev().map(|s| [s[0], s[1]]).collect();
        model.spacing = spacing;

        let [fj, dfj] = model.table[0];
        let (cl, cu) = model.basis.decompose(X_JOIN, fj, dfj);
        model.c_lower = cl;
        model.c_upper = cu;

        let n2 = model.raw_integral(1.0, false)?;
        model.norm = n2.re.sqrt();
        Ok(model)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `μ = √(γ + 1/4)`, imaginary for `γ < −1/4`.
    pub fn mu(&self) -> Complex64 {
        self.basis.mu
    }

    /// Squared norm of the unnormalized representative.
    pub fn norm_sq(&self) -> f64 {
        self.norm * self.norm
    }

    /// `e^{−κx} Σ a_k (κx)^{−k}` and its derivative.
    fn asymptotic(&self, x: f64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut dg = Complex64::new(0.0, 0.0);
        let mut xp = 1.0;
        for (k, a) in self.asym.iter().enumerate() {
            let term = a * xp;
            g += term;
            dg -= term * (k as f64 / x);
            if k > 2 && term.norm() < 1e-17 * g.norm() {
                break;
            }
            xp /= x;
        }
        let e = (-self.kappa * x).exp();
        (e * g, e * (dg - self.kappa * g))
    }

    /// Unnormalized `φ₊(x)` and `φ₊'(x)`.
    pub fn raw_plus(&self, x: f64) -> (Complex64, Complex64) {
        if x <= X_JOIN {
            let b = self.basis.eval(x);
            return (
                self.c_lower * b.lower + self.c_upper * b.upper,
                self.c_lower * b.lower_d + self.c_upper * b.upper_d,
            );
        }
        if x >= X_FAR {
            return self.asymptotic(x);
        }
        let h = self.spacing;
        let k = (((x - X_JOIN) / h).floor() as usize).min(self.table.len() - 2);
        let x0 = X_JOIN + k as f64 * h;
        let s = (x - x0) / h;
        let [f0, d0] = self.table[k];
        let [f1, d1] = self.table[k + 1];
        let q = |xx: f64| self.gamma / (xx * xx) - I;
        let (s0, s1) = (f0 * q(x0), f1 * q(x0 + h));
        let (s2, s3, s4, s5) = (s * s, s * s * s, s.powi(4), s.powi(5));
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * (s3 - 2.0 * s4 + s5);
        let f = f0 * h0 + d0 * (h * h1) + s0 * (h * h * h2) + f1 * h3 + d1 * (h * h4) + s1 * (h * h * h5);
        let dh0 = (-30.0 * s2 + 60.0 * s3 - 30.0 * s4) / h;
        let dh1 = (1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4) / h;
        let dh2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4) / h;
        let dh3 = -dh0;
        let dh4 = (-12.0 * s2 + 28.0 * s3 - 15.0 * s4) / h;
        let dh5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4) / h;
        let df = f0 * dh0 + d0 * (h * dh1) + s0 * (h * h * dh2) + f1 * dh3 + d1 * (h * dh4) + s1 * (h * h * dh5);
        (f, df)
    }

    /// Normalized deficiency vector `φ̂₊(x)` (`plus = true`) or `φ̂₋(x)`.
    pub fn deficiency_vector(&self, plus: bool, x: f64) -> Complex64 {
        let f = self.raw_plus(x).0 / self.norm;
        if plus {
            f
        } else {
            f.conj()
        }
    }

    /// `(c_lower, c_upper)` of the normalized `φ̂₊` or `φ̂₋`, each with
    /// respect to the Frobenius basis of its own spectral parameter.
    pub fn local_coefficients(&self, plus: bool) -> (Complex64, Complex64) {
        let (l, u) = (self.c_lower / self.norm, self.c_upper / self.norm);
        if plus {
            (l, u)
        } else if self.basis.mu.im != 0.0 {
            // conjugation swaps x^{1/2+iν} and x^{1/2−iν}
            (u.conj(), l.conj())
        } else {
            (l.conj(), u.conj())
        }
    }

    /// `∫ a^{−1/4} φ₊(x/√a) · w(x) dx` with `w = φ₊` (`twin`) or `conj φ₊`.
    fn raw_integral(&self, a: f64, twin: bool) -> Result<Complex64> {
        let s = a.powf(-0.5);
        let pref = a.powf(-0.25);
        let integrand = |x: f64| {
            let p = self.raw_plus(x).0;
            let w = if twin { p } else { p.conj() };
            self.raw_plus(s * x).0 * w * pref
        };
        let near_decay = (2.0 - 2.0 * self.basis.mu.re).max(0.05);
        let near = quad_semiinf(
            |u| {
                let x = X_JOIN * (-u).exp();
                integrand(x) * x
            },
            QUAD_TOL,
            near_decay,
        )?;
        let far = quad_semiinf_from(integrand, X_JOIN, QUAD_TOL, FRAC_1_SQRT_2 * (1.0 + s))?;
        Ok(near.value + far.value)
    }

    /// `(c^{++}, c^{+−}, c^{−+}, c^{−−})` for the dilation by `a`.
    pub fn overlaps_for_scale(&self, a: f64) -> Result<[Complex64; 4]> {
        let n2 = self.norm * self.norm;
        let j1 = self.raw_integral(a, false)? / n2;
        let j2 = self.raw_integral(a, true)? / n2;
        Ok([j1, j2.conj(), j2, j1.conj()])
    }

    /// `(lower, upper)` proportions of a boundary condition.
    fn boundary_pair(&self, bc: &BoundaryCondition) -> Result<(Complex64, Complex64)> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let below = self.gamma < -0.25;
        match *bc {
            BoundaryCondition::Friedrichs | BoundaryCondition::Krein if below => Err(Error::InvalidBoundary(
                "Friedrichs and Krein extensions need γ ≥ −1/4 (the operator is unbounded below otherwise)".into(),
            )),
            BoundaryCondition::Friedrichs => Ok((zero, one)),
            BoundaryCondition::Krein if self.basis.is_log_case() => Ok((zero, one)),
            BoundaryCondition::Krein => Ok((one, zero)),
            BoundaryCondition::Angle(theta) if below => Ok((
                -Complex64::from_polar(1.0, -theta),
                Complex64::from_polar(1.0, theta),
            )),
            BoundaryCondition::Angle(theta) => Ok((Complex64::new(theta.sin(), 0.0), Complex64::new(theta.cos(), 0.0))),
            BoundaryCondition::Asymptotic { lower, upper } => {
                if lower.norm() == 0.0 && upper.norm() == 0.0 {
                    Err(Error::InvalidBoundary("asymptotic condition with both coefficients zero".into()))
                } else {
                    Ok((lower, upper))
                }
            }
            other => Err(Error::InvalidBoundary(format!(
                "inverse-square model does not understand {other:?}"
            ))),
        }
    }
}

impl OperatorModel for InverseSquare {
    fn name(&self) -> &'static str {
        "inverse-square"
    }

    fn describe(&self) -> String {
        format!("-d^2/dx^2 + {}/x^2 on (0, inf)", self.gamma)
    }

    fn deficiency_dims(&self) -> (usize, usize) {
        (1, 1)
    }

    fn group(&self) -> OneParamSubgroup {
        OneParamSubgroup::DILATIONS
    }

    fn admits(&self, g: &AffineMap) -> bool {
        g.offset() == 0.0
    }

    fn overlap(&self, g: &AffineMap) -> Result<OverlapData> {
        if !self.admits(g) {
            return Err(outside_group(g));
        }
        let [a, b, c, d] = self.overlaps_for_scale(g.slope())?;
        Ok(OverlapData::scalar(a, b, c, d))
    }

    fn accuracy(&self) -> f64 {
        1e-9
    }

    fn vn_from_boundary(&self, bc: &BoundaryCondition) -> Result<ContractionParameter> {
        let (lo, up) = self.boundary_pair(bc)?;
        let functional = |(cl, cu): (Complex64, Complex64)| up * cl - lo * cu;
        let num = functional(self.local_coefficients(true));
        let den = functional(self.local_coefficients(false));
        if den.norm() <= 1e-14 * num.norm().max(1e-300) {
            return Err(Error::InvalidBoundary(format!("{bc:?} is not a dissipative extension")));
        }
        let v = num / den;
        if v.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidBoundary(format!(
                "{bc:?} gives |v| = {} > 1 (not dissipative)",
                v.norm()
            )));
        }
        Ok(ContractionParameter::Scalar(v))
    }

    fn boundary_from_vn(&self, v: &ContractionParameter) -> Result<BoundaryCondition> {
        let v = v
            .value()
            .ok_or_else(|| Error::InvalidBoundary("inverse-square model has a nontrivial parameter ball".into()))?;
        let (lp, up) = self.local_coefficients(true);
        let (lm, um) = self.local_coefficients(false);
        let (cl, cu) = (lp - v * lm, up - v * um);
        let scale = cl.norm().max(cu.norm());
        if scale == 0.0 {
            return Err(Error::InvalidBoundary("v produces the zero vector".into()));
        }
        let (cl, cu) = (cl / scale, cu / scale);
        let unitary = (v.norm() - 1.0).abs() <= TAG_TOL;
        if self.gamma >= -0.25 {
            if cl.norm() <= TAG_TOL {
                return Ok(BoundaryCondition::Friedrichs);
            }
            if cu.norm() <= TAG_TOL && !self.basis.is_log_case() {
                return Ok(BoundaryCondition::Krein);
            }
            let ratio = cl / cu;
            if unitary && ratio.im.abs() <= TAG_TOL * (1.0 + ratio.norm()) {
                return Ok(BoundaryCondition::Angle(ratio.re.atan()));
            }
        } else if unitary {
            // (−e^{−iΘ}, e^{iΘ}): −cl/cu = e^{−2iΘ}
            let theta = -0.5 * (-cl / cu).arg();
            return Ok(BoundaryCondition::Angle(theta));
        }
        Ok(BoundaryCondition::Asymptotic { lower: cl, upper: cu })
    }

    fn representative_norms_sq(&self) -> (Option<f64>, Option<f64>) {
        (Some(self.norm_sq()), Some(self.norm_sq()))
    }
}
