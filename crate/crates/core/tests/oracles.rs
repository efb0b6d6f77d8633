//! Cross-module checks against closed forms, through the public API only.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use extflow_core::flow::{check_group_law, invariant_extensions, ExtensionKind, GroupVerdict, DEFAULT_T_SAMPLES};
use extflow_core::models::by_name;
use extflow_core::spectra::{
    adjacent_ratio, interval_dissipative_lattice, interval_sa_spectrum, progression_ratio,
    shoot_negative_eigenvalues, SpectrumWindow,
};
use extflow_core::weylcheck::nonequivalence_certificate;
use extflow_core::{AffineMap, Complex64, OneParamSubgroup};

#[test]
fn interval_translation_fixes_one_dissipative_extension() {
    for ell in [0.5, 1.0, 2.0] {
        let model = by_name("interval", ell, 0.0).unwrap();
        let report = invariant_extensions(model.as_ref(), &OneParamSubgroup::TRANSLATIONS, &DEFAULT_T_SAMPLES).unwrap();
        assert_eq!(report.verdict, GroupVerdict::UniqueDissipative);
        let p = report.fixed_points[0];
        assert_eq!(p.kind, ExtensionKind::Dissipative);
        assert!((p.v.unwrap() - Complex64::new((-ell).exp(), 0.0)).norm() < 1e-10);
        let period = report.cyclic_period.unwrap();
        assert!((period - TAU / ell).abs() < 1e-9, "{period}");
    }
}

#[test]
fn inverse_square_below_threshold() {
    for gamma in [-25.0, -1.0] {
        let nu = (-gamma - 0.25f64).sqrt();
        let model = by_name("inverse-square", 1.0, gamma).unwrap();
        let report = invariant_extensions(model.as_ref(), &model.group(), &DEFAULT_T_SAMPLES).unwrap();
        assert_eq!(report.verdict, GroupVerdict::UniqueDissipative);
        let expected = Complex64::from_polar((-nu * FRAC_PI_2).exp(), -FRAC_PI_4);
        let v = report.fixed_points[0].v.unwrap();
        assert!((v - expected).norm() < 1e-7, "{v} vs {expected}");
        let period = report.cyclic_period.unwrap();
        assert!((period - TAU / nu).abs() < 1e-6, "{period}");
    }
}

#[test]
fn group_law_holds_across_models() {
    let f = AffineMap::new(1.0, 0.4);
    let g = AffineMap::new(1.0, -1.3);
    let interval = by_name("interval", 1.0, 0.0).unwrap();
    assert!(check_group_law(interval.as_ref(), &f, &g, 32).unwrap() < 1e-10);
    let sq = by_name("inverse-square", 1.0, 0.5).unwrap();
    let (f, g) = (AffineMap::new(1.7, 0.0), AffineMap::new(0.6, 0.0));
    assert!(check_group_law(sq.as_ref(), &f, &g, 32).unwrap() < 1e-7);
}

#[test]
fn interval_spectra_closed_forms() {
    let window = SpectrumWindow::new(-30.0, 30.0, 1000).unwrap();
    let ell = 2.0;
    let sa = interval_sa_spectrum(ell, 0.0, &window).unwrap();
    for e in &sa.eigenvalues {
        assert!((e.value.re - TAU * e.index as f64 / ell).abs() < 1e-12);
        assert_eq!(e.value.im, 0.0);
    }
    let rho = Complex64::from_polar(0.25, 0.5);
    let lattice = interval_dissipative_lattice(ell, rho, &window).unwrap();
    assert!(!lattice.is_empty());
    for e in &lattice.eigenvalues {
        assert!((e.value.im - 4f64.ln() / ell).abs() < 1e-12);
        let lhs = (Complex64::i() * e.value * ell).exp();
        assert!((lhs - rho).norm() < 1e-12);
    }
}

#[test]
fn shooting_ratio_is_the_adjacent_ratio() {
    let gamma = -25.0;
    let list = shoot_negative_eigenvalues(gamma, 0.0, 4).unwrap();
    assert_eq!(list.len(), 4);
    let fit = progression_ratio(&list.real_values(), adjacent_ratio(gamma).unwrap()).unwrap();
    assert!(fit.relative_deviation < 1e-6, "{fit:?}");
}

#[test]
fn nilpotency_separates_lengths() {
    let cert = nonequivalence_certificate(1.0, 1.5, 128, 1e-9).unwrap();
    assert!(cert.separated);
    assert!((cert.first.s_star - 1.0).abs() <= cert.first.h);
    assert!((cert.second.s_star - 1.5).abs() <= cert.second.h);
    assert!(nonequivalence_certificate(1.0, 1.0, 128, 1e-9).is_err());
}
