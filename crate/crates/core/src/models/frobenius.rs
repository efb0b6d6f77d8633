//! Frobenius series at the regular singular point `x = 0` of
//! `f'' = (γ/x² − λ) f`.
//!
//! The exponents are `1/2 ± μ` with `μ = √(γ + 1/4)` (purely imaginary for
//! `γ < −1/4`). `lower` is the solution with leading term `x^{1/2−μ}` and
//! `upper` the one with `x^{1/2+μ}`. For `μ = 0` the lower solution carries
//! the logarithm: `y_reg·ln x + x^{1/2} Σ b_k x^{2k}`.

use num_complex::Complex64;

const MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct FrobeniusBasis {
    pub gamma: f64,
    pub mu: Complex64,
    pub lambda: Complex64,
}

/// Values and first derivatives of the two basis solutions at one point.
#[derive(Debug, Clone, Copy)]
pub struct BasisValues {
    pub lower: Complex64,
    pub lower_d: Complex64,
    pub upper: Complex64,
    pub upper_d: Complex64,
}

impl FrobeniusBasis {
    pub fn new(gamma: f64, lambda: Complex64) -> Self {
        FrobeniusBasis {
            gamma,
            mu: Complex64::new(gamma + 0.25, 0.0).sqrt(),
            lambda,
        }
    }

    pub fn is_log_case(&self) -> bool {
        self.mu == Complex64::new(0.0, 0.0)
    }

    /// `x^r Σ a_k x^{2k}` and its derivative, `a_0 = 1`.
    fn power_series(&self, r: Complex64, x: f64) -> (Complex64, Complex64) {
        let x2 = x * x;
        let mut a = Complex64::new(1.0, 0.0);
        let mut sum = a;
        let mut dsum = r * a;
        let mut xp = 1.0;
        for k in 1..MAX_TERMS {
            let kf = k as f64;
            a = -self.lambda * a / (2.0 * kf * (2.0 * r + 2.0 * kf - 1.0));
            xp *= x2;
            let term = a * xp;
            sum += term;
            dsum += term * (r + 2.0 * kf);
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        let xr = Complex64::new(x, 0.0).powc(r);
        (xr * sum, xr * dsum / x)
    }

    /// Regular and logarithmic solutions for `μ = 0`.
    fn log_series(&self, x: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let x2 = x * x;
        let lx = x.ln();
        let mut a = Complex64::new(1.0, 0.0);
        let mut harmonic = 0.0;
        let (mut s, mut ds) = (a, a * 0.5);
        let (mut t, mut dt) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut xp = 1.0;
        for k in 1..MAX_TERMS {
            let kf = k as f64;
            a = -self.lambda * a / (4.0 * kf * kf);
            harmonic += 1.0 / kf;
            let b = -harmonic * a;
            xp *= x2;
            let e = 0.5 + 2.0 * kf;
            s += a * xp;
            ds += a * xp * e;
            t += b * xp;
            dt += b * xp * e;
            if (a * xp).norm() <= 1e-18 * s.norm() {
                break;
            }
        }
        let sx = x.sqrt();
        // y_reg = √x·s, y_log = y_reg ln x + √x·t
        let reg = s * sx;
        let reg_d = ds * sx / x;
        let log = reg * lx + t * sx;
        let log_d = reg_d * lx + reg / x + dt * sx / x;
        (reg, reg_d, log, log_d)
    }

    pub fn eval(&self, x: f64) -> BasisValues {
        if self.is_log_case() {
            let (reg, reg_d, log, log_d) = self.log_series(x);
            BasisValues {
                lower: log,
                lower_d: log_d,
                upper: reg,
                upper_d: reg_d,
            }
        } else {
            let (lo, lo_d) = self.power_series(0.5 - self.mu, x);
            let (up, up_d) = self.power_series(0.5 + self.mu, x);
            BasisValues {
                lower: lo,
                lower_d: lo_d,
                upper: up,
                upper_d: up_d,
            }
        }
    }

    /// Coefficients `(c_lower, c_upper)` of the solution with value `f` and
    /// derivative `df` at `x`.
    pub fn decompose(&self, x: f64, f: Complex64, df: Complex64) -> (Complex64, Complex64) {
        let b = self.eval(x);
        let w = b.lower * b.upper_d - b.upper * b.lower_d;
        let c_lower = (f * b.upper_d - df * b.upper) / w;
        let c_upper = (b.lower * df - b.lower_d * f) / w;
        (c_lower, c_upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(basis: &FrobeniusBasis, which: usize, x: f64) -> f64 {
        // second difference of the series against the differential equation
        let h = 1e-4 * x;
        let f = |y: f64| {
            let v = basis.eval(y);
            if which == 0 {
                v.lower
            } else {
                v.upper
            }
        };
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let rhs = (basis.gamma / (x * x) - basis.lambda) * f(x);
        (d2 - rhs).norm() / rhs.norm().max(1.0)
    }

    #[test]
    fn series_solve_the_equation() {
        for &gamma in &[0.5, 0.0, -0.25, -1.0, -25.0] {
            for &lambda in &[Complex64::new(0.0, 1.0), Complex64::new(-3.0, 0.0)] {
                let b = FrobeniusBasis::new(gamma, lambda);
                for &x in &[0.05, 0.3, 0.5] {
                    for which in 0..2 {
                        assert!(residual(&b, which, x) < 1e-5, "γ={gamma} λ={lambda} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_zero_is_elementary() {
        // γ = 0: exponents 0 and 1, λ = i gives cos/sin of √λ·x
        let b = FrobeniusBasis::new(0.0, Complex64::new(0.0, 1.0));
        let k = Complex64::new(0.0, 1.0).sqrt();
        let x = 0.4;
        let v = b.eval(x);
        assert!((v.lower - (k * x).cos()).norm() < 1e-14);
        assert!((v.upper - (k * x).sin() / k).norm() < 1e-14);
    }

    #[test]
    fn decomposition_round_trip() {
        let b = FrobeniusBasis::new(-1.0, Complex64::new(0.0, 1.0));
        let (cl, cu) = (Complex64::new(0.3, -1.0), Complex64::new(2.0, 0.5));
        let v = b.eval(0.5);
        let f = cl * v.lower + cu * v.upper;
        let df = cl * v.lower_d + cu * v.upper_d;
        let (l, u) = b.decompose(0.5, f, df);
        assert!((l - cl).norm() < 1e-13 && (u - cu).norm() < 1e-13);
    }
}
