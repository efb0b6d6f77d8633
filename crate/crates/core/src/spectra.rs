//! Eigenvalue oracles: closed-form lattices for the interval derivative and
//! a shooting solver for the negative spectrum of `−d²/dx² + γ/x²` with an
//! oscillatory boundary phase at the origin.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::frobenius::FrobeniusBasis;
use crate::models::{BoundaryCondition, InverseSquare, OperatorModel};
use crate::numerics::{find_root, ode_solve, OdeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumWindow {
    pub lo: f64,
    pub hi: f64,
    pub max_count: usize,
}

impl SpectrumWindow {
    /// Real-part range `[lo, hi]`; complex lattices are cut by `Re λ`.
    pub fn new(lo: f64, hi: f64, max_count: usize) -> Result<Self> {
        if !(lo < hi) || max_count == 0 {
            return Err(Error::InvalidArgument(format!(
                "spectrum window needs lo < hi and max_count ≥ 1, got [{lo}, {hi}] / {max_count}"
            )));
        }
        Ok(SpectrumWindow { lo, hi, max_count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub index: i64,
    pub value: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EigenList {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl EigenList {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|e| e.value).collect()
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.value.re).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    /// Consecutive differences of the sorted eigenvalues.
    pub fn spacings(&self) -> Vec<Complex64> {
        self.eigenvalues.windows(2).map(|w| w[1].value - w[0].value).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im,residual\n");
        for e in &self.eigenvalues {
            writeln!(out, "{},{:.16e},{:.16e},{:.6e}", e.index, e.value.re, e.value.im, e.residual)
                .expect("writing to a String");
        }
        out
    }

    fn sorted(mut eigenvalues: Vec<Eigenvalue>) -> Self {
        eigenvalues.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.index.cmp(&b.index)));
        EigenList { eigenvalues }
    }
}

/// Lattice `λ_n = (arg ρ + 2πn)/ℓ + (i/ℓ) ln(1/|ρ|)` restricted to the window.
/// Eigenfunctions are `e^{−iλx}` and the eigencondition is `e^{iλℓ} = ρ`.
fn lattice(ell: f64, rho: Complex64, window: &SpectrumWindow) -> EigenList {
    let theta = rho.arg();
    let im = -rho.norm().ln() / ell;
    let spacing = TAU / ell;
    let n_lo = ((window.lo * ell - theta) / TAU).ceil() as i64;
    let mut out = Vec::new();
    let mut n = n_lo;
    loop {
        let re = (theta + TAU * n as f64) / ell;
        if re > window.hi + 1e-12 * spacing || out.len() >= window.max_count {
            break;
        }
        if re >= window.lo - 1e-12 * spacing {
            let value = Complex64::new(re, im);
            let residual = ((Complex64::i() * value * ell).exp() - rho).norm() / rho.norm();
            out.push(Eigenvalue { index: n, value, residual });
        }
        n += 1;
    }
    EigenList::sorted(out)
}

/// Self-adjoint extension `f(0) = e^{iΘ} f(ℓ)`: `spec = {(Θ + 2πn)/ℓ}`.
pub fn interval_sa_spectrum(ell: f64, theta: f64, window: &SpectrumWindow) -> Result<EigenList> {
    if !(ell > 0.0) {
        return Err(Error::InvalidArgument(format!("interval length must be positive, got {ell}")));
    }
    Ok(lattice(ell, Complex64::from_polar(1.0, theta), window))
}

/// Maximal dissipative extension `f(0) = ρ f(ℓ)` with `|ρ| < 1`. For
/// `ρ = 0` the semigroup is nilpotent and the spectrum is empty.
pub fn interval_dissipative_lattice(ell: f64, rho: Complex64, window: &SpectrumWindow) -> Result<EigenList> {
    if !(ell > 0.0) {
        return Err(Error::InvalidArgument(format!("interval length must be positive, got {ell}")));
    }
    if !(rho.norm() < 1.0) {
        return Err(Error::InvalidRho { modulus: rho.norm() });
    }
    if rho.norm() == 0.0 {
        return Ok(EigenList::default());
    }
    Ok(lattice(ell, rho, window))
}

/// `ν = √(−γ − 1/4)` for the oscillatory regime.
pub fn oscillation_frequency(gamma: f64) -> Result<f64> {
    if !(gamma < -0.25) {
        return Err(Error::InvalidArgument(format!("oscillatory regime needs γ < −1/4, got {gamma}")));
    }
    Ok((-gamma - 0.25).sqrt())
}

/// `κ = e^{4π/ν}`, the scaling factor of the cyclic invariance subgroup.
pub fn kappa(gamma: f64) -> Result<f64> {
    Ok((4.0 * PI / oscillation_frequency(gamma)?).exp())
}

/// Ratio of consecutive negative eigenvalues at fixed boundary phase,
/// `e^{2π/ν}`: the phase `ν ln √|λ|` advances by `π` between levels.
pub fn adjacent_ratio(gamma: f64) -> Result<f64> {
    Ok((TAU / oscillation_frequency(gamma)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    /// Outward start point, capped at `0.1/√|λ|`.
    pub x_start: f64,
    /// Inward start point in units of `1/√|λ|`.
    pub reach: f64,
    /// Smallest `|λ|` searched.
    pub min_abs: f64,
    pub ode_tol: f64,
    pub max_count: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            x_start: 1e-3,
            reach: 40.0,
            min_abs: 1.0,
            ode_tol: 1e-11,
            max_count: 4,
        }
    }
}

const SCAN_PER_LEVEL: usize = 16;
const MAX_SPAN: f64 = 1e12;

fn radial_rhs(gamma: f64, lambda: f64) -> impl Fn(f64, &[Complex64], &mut [Complex64]) {
    move |x, y, dy| {
        dy[0] = y[1];
        dy[1] = (gamma / (x * x) - lambda) * y[0];
    }
}

/// Normalized Wronskian of the solution carrying the boundary phase at the
/// origin against the decaying solution, at `λ = −e^s`.
fn shooting_mismatch(gamma: f64, theta: f64, s: f64, opts: &ShootOptions) -> Result<f64> {
    let k = (0.5 * s).exp();
    let lambda = -k * k;
    let x_match = 1.0 / k;
    let x_m = opts.x_start.min(0.1 / k);
    let rhs = radial_rhs(gamma, lambda);
    let ode = OdeOptions::default();

    let basis = FrobeniusBasis::new(gamma, Complex64::new(lambda, 0.0)).eval(x_m);
    let phase = Complex64::from_polar(1.0, theta);
    let y0 = [
        Complex64::new((phase * basis.upper).im, 0.0),
        Complex64::new((phase * basis.upper_d).im, 0.0),
    ];
    let outward = ode_solve(&rhs, x_m, &y0, x_match, opts.ode_tol, &ode)?;
    let (fo, dfo) = (outward.final_state()[0].re, outward.final_state()[1].re);

    let x_far = opts.reach / k;
    let y1 = [Complex64::new(1.0, 0.0), Complex64::new(-k, 0.0)];
    let inward = ode_solve(&rhs, x_far, &y1, x_match, opts.ode_tol, &ode)?;
    let (fi, dfi) = (inward.final_state()[0].re, inward.final_state()[1].re);

    let w = fo * dfi - dfo * fi;
    let scale = k * fo.hypot(dfo / k) * fi.hypot(dfi / k);
    if !(scale > 0.0) || !w.is_finite() {
        return Err(Error::Overflow { norm: scale });
    }
    Ok(w / scale)
}

/// Negative eigenvalues of the extension with `f ~ C√x sin(ν ln x + Θ)` at
/// the origin, by shooting. Returns the `count` levels of smallest
/// magnitude with `|λ| ≥ 1`, sorted ascending (most negative first).
pub fn shoot_negative_eigenvalues(gamma: f64, theta: f64, count: usize) -> Result<EigenList> {
    shoot_with(gamma, theta, count, &ShootOptions::default())
}

pub fn shoot_with(gamma: f64, theta: f64, count: usize, opts: &ShootOptions) -> Result<EigenList> {
    let nu = oscillation_frequency(gamma)?;
    if count == 0 || count > opts.max_count {
        return Err(Error::InvalidArgument(format!("count must be in 1..={}, got {count}", opts.max_count)));
    }
    let level = TAU / nu;
    let span = ((count - 1) as f64 * level).exp();
    if span > MAX_SPAN {
        return Err(Error::DynamicRangeExceeded { span });
    }
    let s0 = opts.min_abs.ln();
    let step = level / SCAN_PER_LEVEL as f64;
    let n_scan = SCAN_PER_LEVEL * (count + 1);
    let grid: Vec<f64> = (0..=n_scan).map(|j| s0 + j as f64 * step).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&s| shooting_mismatch(gamma, theta, s, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut found = Vec::new();
    for j in 0..n_scan {
        if found.len() == count {
            break;
        }
        let (a, b) = (values[j], values[j + 1]);
        if a == 0.0 || a.signum() != b.signum() {
            let f = |s: f64| shooting_mismatch(gamma, theta, s, opts).unwrap_or(f64::NAN);
            let s = if a == 0.0 { grid[j] } else { find_root(f, grid[j], grid[j + 1], 1e-13)? };
            let residual = shooting_mismatch(gamma, theta, s, opts)?.abs();
            found.push((s, residual));
        }
    }
    if found.len() < count {
        return Err(Error::InsufficientData(format!(
            "found {} of {count} eigenvalues in |λ| ∈ [{:.3e}, {:.3e}]",
            found.len(),
            s0.exp(),
            grid[n_scan].exp()
        )));
    }
    let eigenvalues = found
        .into_iter()
        .enumerate()
        .map(|(n, (s, residual))| Eigenvalue {
            index: n as i64,
            value: Complex64::new(-s.exp(), 0.0),
            residual,
        })
        .collect();
    Ok(EigenList::sorted(eigenvalues))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProgressionFit {
    pub ratio: f64,
    pub kappa_predicted: f64,
    pub relative_deviation: f64,
}

/// Geometric-mean ratio of consecutive same-sign eigenvalues compared with
/// a predicted ratio.
pub fn progression_ratio(eigs: &[f64], kappa_predicted: f64) -> Result<ProgressionFit> {
    let neg: Vec<f64> = eigs.iter().copied().filter(|&x| x < 0.0).collect();
    let pos: Vec<f64> = eigs.iter().copied().filter(|&x| x > 0.0).collect();
    let mut mags: Vec<f64> = if neg.len() >= pos.len() { neg } else { pos }
        .into_iter()
        .map(f64::abs)
        .collect();
    if mags.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two eigenvalues of one sign, got {}",
            mags.len()
        )));
    }
    mags.sort_by(f64::total_cmp);
    let ratio = (mags[mags.len() - 1] / mags[0]).powf(1.0 / (mags.len() - 1) as f64);
    Ok(ProgressionFit {
        ratio,
        kappa_predicted,
        relative_deviation: (ratio - kappa_predicted).abs() / kappa_predicted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingInvariance {
    /// Elements whose image under `λ ↦ κλ` stays inside the computed range.
    pub checked: usize,
    pub max_relative_error: f64,
}

/// How well `λ ↦ κλ` maps the finite eigenvalue list into itself.
pub fn scaling_invariance(eigs: &[f64], kappa: f64) -> ScalingInvariance {
    let (lo, hi) = eigs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for &x in eigs {
        let image = kappa * x;
        if image.abs() > hi * 1.05 || image.abs() < lo / 1.05 {
            continue;
        }
        checked += 1;
        let err = eigs
            .iter()
            .map(|&y| (image - y).abs() / y.abs())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(err);
    }
    ScalingInvariance {
        checked,
        max_relative_error: worst,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FriedrichsKrein {
    pub gamma: f64,
    pub mu: f64,
    pub v_friedrichs: Complex64,
    pub v_krein: Complex64,
    pub exponents: (f64, f64),
}

/// Parameters of the Friedrichs and Krein extensions for `−1/4 ≤ γ < 3/4`.
pub fn friedrichs_krein_params(gamma: f64) -> Result<FriedrichsKrein> {
    if !(-0.25..0.75).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("need −1/4 ≤ γ < 3/4, got {gamma}")));
    }
    let model = InverseSquare::new(gamma)?;
    let mu = (gamma + 0.25).sqrt();
    let value = |bc| -> Result<Complex64> {
        model
            .vn_from_boundary(&bc)?
            .value()
            .ok_or_else(|| Error::NumericalInconsistency("scalar parameter expected".into()))
    };
    Ok(FriedrichsKrein {
        gamma,
        mu,
        v_friedrichs: value(BoundaryCondition::Friedrichs)?,
        v_krein: value(BoundaryCondition::Krein)?,
        exponents: (0.5 + mu, 0.5 - mu),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn window(lo: f64, hi: f64) -> SpectrumWindow {
        SpectrumWindow::new(lo, hi, 1000).unwrap()
    }

    #[test]
    fn sa_examples() {
        let s = interval_sa_spectrum(TAU, 0.0, &window(-3.5, 3.5)).unwrap();
        let re = s.real_values();
        assert_eq!(re.len(), 7);
        for (x, n) in re.iter().zip(-3..=3) {
            assert!((x - n as f64).abs() < 1e-14);
        }
        let s = interval_sa_spectrum(PI, PI, &window(0.0, 6.0)).unwrap();
        let re = s.real_values();
        assert_eq!(re.len(), 3);
        for (x, e) in re.iter().zip([1.0, 3.0, 5.0]) {
            assert!((x - e).abs() < 1e-14);
        }
        assert!(s.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn window_validation() {
        assert!(SpectrumWindow::new(1.0, 1.0, 3).is_err());
        assert!(SpectrumWindow::new(0.0, 1.0, 0).is_err());
        let s = interval_sa_spectrum(1.0, 0.0, &SpectrumWindow::new(-100.0, 100.0, 5).unwrap()).unwrap();
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn dissipative_examples() {
        let rho = Complex64::new((-1f64).exp(), 0.0);
        let s = interval_dissipative_lattice(1.0, rho, &window(-20.0, 20.0)).unwrap();
        assert_eq!(s.len(), 7);
        for z in s.values() {
            assert!((z.im - 1.0).abs() < 1e-12);
        }
        for d in s.spacings() {
            assert!((d - TAU).norm() < 1e-12);
        }
        assert!(interval_dissipative_lattice(1.0, Complex64::new(0.0, 0.0), &window(-20.0, 20.0))
            .unwrap()
            .is_empty());
        assert!(matches!(
            interval_dissipative_lattice(1.0, Complex64::new(1.0, 0.0), &window(-1.0, 1.0)),
            Err(Error::InvalidRho { .. })
        ));
    }

    #[test]
    fn unit_modulus_limit() {
        let w = window(-10.0, 10.0);
        let sa = interval_sa_spectrum(1.5, 0.4, &w).unwrap();
        let near = interval_dissipative_lattice(1.5, Complex64::from_polar(1.0 - 1e-12, 0.4), &w).unwrap();
        assert_eq!(sa.len(), near.len());
        for (a, b) in sa.values().iter().zip(near.values()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn csv_layout() {
        let s = interval_sa_spectrum(TAU, 0.0, &window(-3.5, 3.5)).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), s.len() + 1);
        assert!(csv.starts_with("index,re,im,residual\n"));
    }

    #[test]
    fn progression_examples() {
        let fit = progression_ratio(&[-1.0, -12.5, -156.25], 12.506).unwrap();
        assert!((fit.ratio - 12.5).abs() < 1e-12);
        assert!((fit.relative_deviation - 0.006 / 12.506).abs() < 1e-12);
        assert!(matches!(progression_ratio(&[-3.0], 2.0), Err(Error::InsufficientData(_))));
        assert!(matches!(progression_ratio(&[-3.0, 4.0], 2.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn scaling_invariance_of_constructed_sets() {
        let set = [-1.0, -2.0, -4.0, -8.0];
        let r = scaling_invariance(&set, 4.0);
        assert_eq!(r.checked, 2);
        assert!(r.max_relative_error < 1e-15);
        assert!(scaling_invariance(&set, 3.0).max_relative_error > 0.2);
    }

    #[test]
    fn kappa_values() {
        assert!((kappa(-25.0).unwrap() - 12.502586).abs() < 1e-5);
        assert!((adjacent_ratio(-25.0).unwrap().powi(2) - kappa(-25.0).unwrap()).abs() < 1e-10);
        assert!((kappa(-1.0).unwrap() / 2.0e6 - 1.0).abs() < 0.05);
        assert!(kappa(-0.2).is_err());
    }

    /// `ln Γ(z)` for `Re z ≥ 1` by upward recurrence and Stirling's series.
    fn ln_gamma(z: Complex64) -> Complex64 {
        let mut shift = Complex64::new(0.0, 0.0);
        let mut w = z;
        while w.re < 20.0 {
            shift += w.ln();
            w += 1.0;
        }
        let inv = 1.0 / w;
        let inv2 = inv * inv;
        let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
        (w - 0.5) * w.ln() - w + 0.5 * TAU.ln() + series - shift
    }

    /// Closed form from the small-argument phase of `K_{iν}`: the decaying
    /// solution at `λ = −k²` behaves like `√x sin(ν ln(kx/2) − arg Γ(1+iν))`.
    fn oracle_levels(gamma: f64, theta: f64, min_abs: f64, count: usize) -> Vec<f64> {
        let nu = (-gamma - 0.25).sqrt();
        let arg = ln_gamma(Complex64::new(1.0, nu)).im;
        let mut out: Vec<f64> = (-200..200)
            .map(|n| {
                let k = 2.0 * ((theta + arg + PI * n as f64) / nu).exp();
                -k * k
            })
            .filter(|l| l.abs() >= min_abs)
            .collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out.truncate(count);
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn ln_gamma_oracle_sanity() {
        assert!((ln_gamma(Complex64::new(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-12);
        // |Γ(1+iy)|² = πy / sinh(πy)
        let y: f64 = 2.0;
        let lhs = 2.0 * ln_gamma(Complex64::new(1.0, y)).re;
        assert!((lhs - (PI * y / (PI * y).sinh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn shooting_matches_closed_form() {
        for (gamma, theta) in [(-25.0, 0.0), (-25.0, 0.7), (-1.0, 0.3), (-4.0, -1.0)] {
            let s = shoot_negative_eigenvalues(gamma, theta, 3).unwrap();
            let got = s.real_values();
            let expected = oracle_levels(gamma, theta, 1.0, 3);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g / e - 1.0).abs() < 1e-7, "γ={gamma} Θ={theta}: {got:?} vs {expected:?}");
            }
            let fit = progression_ratio(&got, adjacent_ratio(gamma).unwrap()).unwrap();
            assert!(fit.relative_deviation < 1e-7);
        }
    }

    #[test]
    fn shooting_phase_shift_by_pi() {
        let a = shoot_negative_eigenvalues(-25.0, 0.4, 3).unwrap().real_values();
        let b = shoot_negative_eigenvalues(-25.0, 0.4 + PI, 3).unwrap().real_values();
        for (x, y) in a.iter().zip(&b) {
            assert!((x / y - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shooting_limits() {
        assert!(matches!(shoot_negative_eigenvalues(-25.0, 0.0, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(shoot_negative_eigenvalues(-0.3, 0.0, 4), Err(Error::DynamicRangeExceeded { .. })));
        assert!(shoot_negative_eigenvalues(0.0, 0.0, 2).is_err());
    }

    #[test]
    fn fk_examples() {
        let p = friedrichs_krein_params(0.0).unwrap();
        assert_eq!(p.exponents, (1.0, 0.0));
        assert!((p.v_friedrichs - 1.0).norm() < 1e-6);
        assert!((p.v_krein + Complex64::i()).norm() < 1e-6);
        let c = friedrichs_krein_params(-0.25).unwrap();
        assert_eq!(c.exponents, (0.5, 0.5));
        assert!((c.v_friedrichs - c.v_krein).norm() < 1e-12);
        let h = friedrichs_krein_params(0.5).unwrap();
        assert!((h.exponents.0 - 1.36603).abs() < 1e-5 && (h.exponents.1 + 0.36603).abs() < 1e-5);
        assert!(h.exponents.1 > -0.5);
        assert!(friedrichs_krein_params(0.75).is_err());
        assert!(friedrichs_krein_params(-0.3).is_err());
    }

    proptest! {
        #[test]
        fn lattice_eigenconditions(ell in 0.2f64..5.0, theta in -PI..PI, r in 0.01f64..0.99) {
            let w = window(-30.0, 30.0);
            for z in interval_sa_spectrum(ell, theta, &w).unwrap().values() {
                prop_assert!(((Complex64::i() * -z * ell).exp() - Complex64::from_polar(1.0, -theta)).norm() < 1e-12);
            }
            let rho = Complex64::from_polar(r, theta);
            for z in interval_dissipative_lattice(ell, rho, &w).unwrap().values() {
                prop_assert!(z.im > 0.0);
                let inv = 1.0 / rho;
                prop_assert!(((Complex64::i() * -z * ell).exp() - inv).norm() <= 1e-10 * inv.norm());
            }
            let s = interval_sa_spectrum(ell, theta, &w).unwrap();
            for d in s.spacings() {
                prop_assert!((d.re - TAU / ell).abs() < 1e-12 * (1.0 + 30.0));
            }
        }
    }
}
