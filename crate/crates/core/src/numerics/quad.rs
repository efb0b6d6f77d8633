//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature for complex valued
//! integrands on finite and semi-infinite ranges.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const DEFAULT_PANEL_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`,
/// bisecting the panel with the largest error estimate until the total
/// estimate drops below `tol`.
pub fn quad_finite<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    quad_finite_budget(&f, a, b, tol, DEFAULT_PANEL_BUDGET)
}

pub fn quad_finite_budget<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<QuadratureResult> {
    if !(a < b) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs a < b and tol > 0 (a={a}, b={b}, tol={tol})"
        )));
    }
    let mut panels = vec![gk15(f, a, b)];
    let mut evaluations = 15;
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::NoConvergence {
                panels: panels.len(),
                estimate: f64::INFINITY,
            });
        }
        if error <= tol {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        if panels.len() >= budget {
            return Err(Error::NoConvergence {
                panels: panels.len(),
                estimate: error,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel cannot be split further in floating point
            return Err(Error::NoConvergence {
                panels: panels.len() + 1,
                estimate: error,
            });
        }
        panels.push(gk15(f, p.a, mid));
        panels.push(gk15(f, mid, p.b));
        evaluations += 30;
    }
}

/// `∫₀^∞ f` for an integrand decaying at least like `e^{−decay·x}`.
pub fn quad_semiinf<F: Fn(f64) -> Complex64>(f: F, tol: f64, decay: f64) -> Result<QuadratureResult> {
    quad_semiinf_from(f, 0.0, tol, decay)
}

/// `∫ₐ^∞ f`, truncated at `a + 50/decay`; the neglected tail is estimated
/// from the integrand at the cut and added to the error estimate.
pub fn quad_semiinf_from<F: Fn(f64) -> Complex64>(f: F, a: f64, tol: f64, decay: f64) -> Result<QuadratureResult> {
    if !(decay > 0.0) {
        return Err(Error::InvalidArgument(format!("decay rate must be positive, got {decay}")));
    }
    let cut = a + 50.0 / decay;
    let mut r = quad_finite_budget(&f, a, cut, tol, DEFAULT_PANEL_BUDGET)?;
    r.error_estimate += f(cut).norm() / decay;
    r.evaluations += 1;
    Ok(r)
}
