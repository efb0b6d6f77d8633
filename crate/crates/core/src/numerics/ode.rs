//! Dormand–Prince 5(4) integrator for complex first-order systems with
//! cubic Hermite dense output.
//!
//! The local error is measured against the Euclidean norm of the whole
//! state, so exponentially growing or decaying solutions are followed with
//! a uniform relative accuracy.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Initial step magnitude; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// Accepted steps of an integration, usable as a continuous solution.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    xs: Vec<f64>,
    ys: Vec<Vec<Complex64>>,
    dys: Vec<Vec<Complex64>>,
}

impl OdeSolution {
    pub fn steps(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn states(&self) -> &[Vec<Complex64>] {
        &self.ys
    }

    pub fn final_state(&self) -> &[Complex64] {
        self.ys.last().expect("solution has at least one node")
    }

    pub fn final_x(&self) -> f64 {
        *self.xs.last().expect("solution has at least one node")
    }

    /// Cubic Hermite interpolation between the bracketing accepted steps.
    /// Returns `None` outside the integrated range.
    pub fn eval(&self, x: f64) -> Option<Vec<Complex64>> {
        let n = self.xs.len();
        let forward = self.xs[n - 1] >= self.xs[0];
        let (lo, hi) = if forward {
            (self.xs[0], self.xs[n - 1])
        } else {
            (self.xs[n - 1], self.xs[0])
        };
        if x < lo || x > hi {
            return None;
        }
        // index k with x between xs[k] and xs[k+1]
        let k = if forward {
            self.xs.partition_point(|&xi| xi <= x).saturating_sub(1)
        } else {
            self.xs.partition_point(|&xi| xi >= x).saturating_sub(1)
        }
        .min(n.saturating_sub(2));
        if n == 1 {
            return Some(self.ys[0].clone());
        }
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(
            (0..self.ys[k].len())
                .map(|i| {
                    self.ys[k][i] * h00
                        + self.dys[k][i] * (h10 * h)
                        + self.ys[k + 1][i] * h01
                        + self.dys[k + 1][i] * (h11 * h)
                })
                .collect(),
        )
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn combo(y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) -> Vec<Complex64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        let ch = c * h;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * ch;
        }
    }
    out
}

/// Integrates `y' = rhs(x, y)` from `x0` to `x1` (either direction).
pub fn ode_solve<F>(rhs: F, x0: f64, y0: &[Complex64], x1: f64, tol: f64, opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    integrate(&rhs, x0, y0, &[x1], tol, opts).map(|(sol, _)| sol)
}

/// Integrates through the monotone list `points`, landing exactly on each,
/// and returns the states there.
pub fn ode_solve_at<F>(
    rhs: F,
    x0: f64,
    y0: &[Complex64],
    points: &[f64],
    tol: f64,
    opts: &OdeOptions,
) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    integrate(&rhs, x0, y0, points, tol, opts).map(|(_, at)| at)
}

fn integrate<F>(
    rhs: &F,
    x0: f64,
    y0: &[Complex64],
    stops: &[f64],
    tol: f64,
    opts: &OdeOptions,
) -> Result<(OdeSolution, Vec<Vec<Complex64>>)>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("ODE tolerance must be positive, got {tol}")));
    }
    let Some(&x_end) = stops.last() else {
        return Err(Error::InvalidArgument("no output points requested".into()));
    };
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    if stops.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (stops[0] - x0) * dir < 0.0 {
        return Err(Error::InvalidArgument("output points must be monotone in the integration direction".into()));
    }
    let dim = y0.len();
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut k1 = vec![Complex64::new(0.0, 0.0); dim];
    rhs(x, &y, &mut k1);

    let mut sol = OdeSolution {
        xs: vec![x],
        ys: vec![y.clone()],
        dys: vec![k1.clone()],
    };
    let mut at = Vec::with_capacity(stops.len());
    let mut next_stop = 0;
    while next_stop < stops.len() && stops[next_stop] == x {
        at.push(y.clone());
        next_stop += 1;
    }

    let span = (x_end - x0).abs();
    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let d0 = norm(&y);
            let d1 = norm(&k1);
            if d0 > 1e-5 && d1 > 1e-5 {
                0.01 * d0 / d1
            } else {
                1e-6
            }
        }
    }
    .min(span)
    .min(opts.max_step);

    let mut k2 = vec![Complex64::new(0.0, 0.0); dim];
    let mut k3 = k2.clone();
    let mut k4 = k2.clone();
    let mut k5 = k2.clone();
    let mut k6 = k2.clone();
    let mut k7 = k2.clone();
    let mut steps = 0usize;

    while next_stop < stops.len() {
        let target = stops[next_stop];
        let remaining = (target - x).abs();
        let clamped = h >= remaining;
        let hs = if clamped { remaining } else { h } * dir;
        if hs.abs() < 1e-14 * x.abs().max(1.0) && !clamped {
            return Err(Error::StepUnderflow { x });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { x });
        }

        rhs(x + C2 * hs, &combo(&y, hs, &[(A21, &k1)]), &mut k2);
        rhs(x + C3 * hs, &combo(&y, hs, &[(A31, &k1), (A32, &k2)]), &mut k3);
        rhs(x + C4 * hs, &combo(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        rhs(
            x + C5 * hs,
            &combo(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        rhs(
            x + hs,
            &combo(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            &mut k6,
        );
        let y_new = combo(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let x_new = if clamped { target } else { x + hs };
        rhs(x_new, &y_new, &mut k7);

        let err_vec = combo(
            &vec![Complex64::new(0.0, 0.0); dim],
            hs,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let scale = tol * norm(&y).max(norm(&y_new)).max(1e-300);
        let err = norm(&err_vec) / scale;
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            x = x_new;
            y = y_new;
            std::mem::swap(&mut k1, &mut k7);
            sol.xs.push(x);
            sol.ys.push(y.clone());
            sol.dys.push(k1.clone());
            while next_stop < stops.len() && stops[next_stop] == x {
                at.push(y.clone());
                next_stop += 1;
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a clamped step says nothing about the natural step size
            let base = if clamped { h.max(hs.abs()) } else { hs.abs() };
            h = (base * grow).min(opts.max_step);
        } else {
            h = hs.abs() * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok((sol, at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn oscillator(_x: f64, y: &[Complex64], dy: &mut [Complex64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn exponential_growth() {
        let sol = ode_solve(|_, y, dy| dy[0] = y[0], 0.0, &[c(1.0, 0.0)], 1.0, 1e-12, &OdeOptions::default()).unwrap();
        assert!((sol.final_state()[0].re - E).abs() < 1e-9);
        assert_eq!(sol.final_x(), 1.0);
    }

    #[test]
    fn harmonic_oscillator() {
        let sol = ode_solve(oscillator, 0.0, &[c(0.0, 0.0), c(1.0, 0.0)], PI, 1e-11, &OdeOptions::default()).unwrap();
        assert!(sol.final_state()[0].norm() < 1e-8);
        let mid = sol.eval(1.0).unwrap();
        assert!((mid[0].re - 1f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn energy_conservation() {
        let sol = ode_solve(oscillator, 0.0, &[c(0.0, 0.0), c(1.0, 0.0)], 20.0 * PI, 1e-11, &OdeOptions::default()).unwrap();
        for y in sol.states() {
            let energy = y[0].norm_sqr() + y[1].norm_sqr();
            assert!((energy - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn backward_decaying_solution() {
        // f'' = -i f, decaying branch e^{-κx} with κ = e^{-iπ/4}
        let k = Complex64::from_polar(1.0, -FRAC_PI_4);
        let lam = c(0.0, 1.0);
        let x_far = 40.0;
        let f = |x: f64| (-k * x).exp();
        let y0 = [f(x_far), -k * f(x_far)];
        let sol = ode_solve(
            move |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -lam * y[0];
            },
            x_far,
            &y0,
            1.0,
            1e-12,
            &OdeOptions::default(),
        )
        .unwrap();
        let y1 = sol.final_state()[0];
        assert!((y1 - f(1.0)).norm() <= 1e-6 * f(1.0).norm());
        let y5 = sol.eval(5.0).unwrap()[0];
        assert!((y5 - f(5.0)).norm() <= 1e-6 * f(5.0).norm());
    }

    #[test]
    fn lands_on_requested_points() {
        let pts: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1).collect();
        let at = ode_solve_at(|_, y, dy| dy[0] = y[0], 0.0, &[c(1.0, 0.0)], &pts, 1e-12, &OdeOptions::default()).unwrap();
        assert_eq!(at.len(), pts.len());
        for (x, y) in pts.iter().zip(&at) {
            assert!((y[0].re - x.exp()).abs() < 1e-10);
        }
        let bad = ode_solve_at(|_, y, dy| dy[0] = y[0], 0.0, &[c(1.0, 0.0)], &[0.5, 0.2], 1e-8, &OdeOptions::default());
        assert!(bad.is_err());
    }

    #[test]
    fn singularity_underflows() {
        // y' = y² blows up at x = 1
        let r = ode_solve(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[c(1.0, 0.0)], 2.0, 1e-10, &OdeOptions::default());
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
