//! Command execution. Every command produces a JSON-ready result, a flat
//! table for CSV output and a list of pass/fail checks.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use extflow_core::flow::{
    disk_samples, fixed_points_flow, flow_tag, gamma_map, invariant_extensions, orbit, period_detect,
    verify_semibounded_fixed, ExtensionKind, FlowFixedPoints, GroupVerdict, InvariantPoint, DEFAULT_T_SAMPLES,
};
use extflow_core::models::{by_name, InverseSquare, OperatorModel};
use extflow_core::spectra::{
    adjacent_ratio, interval_dissipative_lattice, interval_sa_spectrum, kappa, oscillation_frequency,
    friedrichs_krein_params, progression_ratio, scaling_invariance, shoot_negative_eigenvalues, EigenList,
    SpectrumWindow,
};
use extflow_core::suite::{self, Check};
use extflow_core::weylcheck::{
    build_interval_grid, generator_invariance_residual, nonequivalence_certificate, refinement_study,
    weyl_residual, ConvergenceOrder, Propagator, RefinementConfig, Representation, TestFunction, Variant,
};
use extflow_core::{Complex64, Error, OneParamSubgroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, GroupKind, ModelName, RunConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config: RunConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(skip)]
    pub table: Table,
}

struct Outcome {
    results: Value,
    checks: Vec<Check>,
    table: Table,
    timings: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(results: Value, checks: Vec<Check>, table: Table) -> Self {
        Outcome {
            results,
            checks,
            table,
            timings: BTreeMap::new(),
        }
    }
}

fn num(x: f64) -> String {
    // drop the sign of negative zero
    format!("{:.16e}", x + 0.0)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("core types serialize")
}

fn group_of(cfg: &RunConfig) -> OneParamSubgroup {
    match cfg.group() {
        GroupKind::Translation => OneParamSubgroup::Translation { speed: cfg.speed },
        GroupKind::Scaling => OneParamSubgroup::DILATIONS,
    }
}

fn model_of(cfg: &RunConfig) -> Result<Box<dyn OperatorModel>, Error> {
    by_name(cfg.model().name(), cfg.ell, cfg.gamma)
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, Error> {
    let start = Instant::now();
    let mut outcome = match cfg.command {
        Command::FlowOrbit => flow_orbit(cfg)?,
        Command::FixedPoints => fixed_points(cfg)?,
        Command::Invariance => invariance(cfg)?,
        Command::Period => period(cfg)?,
        Command::Spectrum => spectrum(cfg)?,
        Command::Shoot => shoot(cfg)?,
        Command::FkParams => fk_params(cfg)?,
        Command::Weyl => weyl(cfg)?,
        Command::GeneratorCheck => generator_check(cfg)?,
        Command::Refine => refine(cfg)?,
        Command::CertifyNonequivalence => certify(cfg)?,
        Command::All => all(),
    };
    outcome.timings.insert("total".into(), start.elapsed().as_secs_f64());
    let passed = outcome.checks.iter().all(|c| c.passed);
    Ok(RunReport {
        command: cfg.command,
        config: cfg.clone(),
        results: outcome.results,
        checks: outcome.checks,
        passed,
        timings: cfg.timings.then_some(outcome.timings),
        table: outcome.table,
    })
}

fn flow_orbit(cfg: &RunConfig) -> Result<Outcome, Error> {
    let model = model_of(cfg)?;
    let ts = cfg.t.clone().unwrap_or_else(|| (0..=40).map(|k| 0.1 * k as f64).collect());
    let v0 = Complex64::new(cfg.v0[0], cfg.v0[1]);
    let points = orbit(model.as_ref(), &group_of(cfg), v0, &ts)?;
    let mut table = Table::new(&["t", "re", "im", "modulus"]);
    let mut max_modulus: f64 = 0.0;
    let mut rows = Vec::new();
    for (t, v) in &points {
        max_modulus = max_modulus.max(v.norm());
        table.push(vec![num(*t), num(v.re), num(v.im), num(v.norm())]);
        rows.push(json!({ "t": t, "v": v, "modulus": v.norm() }));
    }
    let checks = vec![Check::at_most("orbit stays in the closed disk", max_modulus, 1.0 + 1e-10)];
    Ok(Outcome::new(json!({ "v0": v0, "orbit": rows }), checks, table))
}

fn point_row(t: Option<f64>, p: &InvariantPoint) -> Vec<String> {
    let (re, im) = p.v.map_or((String::new(), String::new()), |v| (num(v.re), num(v.im)));
    let kind = match p.kind {
        ExtensionKind::SelfAdjoint => "self-adjoint",
        ExtensionKind::Dissipative => "dissipative",
    };
    vec![t.map(num).unwrap_or_default(), re, im, kind.into(), p.multiplicity.to_string()]
}

fn fixed_points(cfg: &RunConfig) -> Result<Outcome, Error> {
    let model = model_of(cfg)?;
    let group = group_of(cfg);
    let ts = cfg.t.clone().unwrap_or_else(|| vec![1.0]);
    let mut table = Table::new(&["t", "re", "im", "kind", "multiplicity"]);
    if model.deficiency_dims() != (1, 1) {
        // No flow on the parameter disk; report the group-level answer.
        let report = invariant_extensions(model.as_ref(), &group, &ts)?;
        for p in &report.fixed_points {
            table.push(point_row(None, p));
        }
        let checks = vec![Check::holds("invariant extension found", report.verdict != GroupVerdict::NoneFound)];
        return Ok(Outcome::new(to_value(&report), checks, table));
    }
    let mut per_t = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &ts {
        let g = group.eval(t);
        let fm = gamma_map(model.as_ref(), &g)?;
        let fixed = fixed_points_flow(model.as_ref(), &g)?;
        let tag = flow_tag(model.as_ref(), &g)?;
        match &fixed {
            FlowFixedPoints::All => table.push(vec![num(t), String::new(), String::new(), "all".into(), String::new()]),
            FlowFixedPoints::Points(pts) => {
                for p in pts {
                    let v = p.v.expect("(1,1) fixed points carry a parameter");
                    worst = worst.max((fm.apply(v) - v).norm());
                    table.push(point_row(Some(t), p));
                }
            }
        }
        per_t.push(json!({ "t": t, "class": tag, "fixed_points": fixed, "condition": fm.condition }));
    }
    let checks = vec![Check::at_most("fixed point residual", worst, cfg.tol)];
    Ok(Outcome::new(json!({ "samples": per_t }), checks, table))
}

fn invariance(cfg: &RunConfig) -> Result<Outcome, Error> {
    let model = model_of(cfg)?;
    let ts = cfg.t.clone().unwrap_or_else(|| DEFAULT_T_SAMPLES.to_vec());
    let report = invariant_extensions(model.as_ref(), &group_of(cfg), &ts)?;
    let mut table = Table::new(&["t", "re", "im", "kind", "multiplicity"]);
    for p in &report.fixed_points {
        table.push(point_row(None, p));
    }
    let checks = vec![Check::holds("invariant extension found", report.verdict != GroupVerdict::NoneFound)];
    Ok(Outcome::new(to_value(&report), checks, table))
}

/// Search range covering one and a half expected periods where one is known.
fn default_t_max(cfg: &RunConfig) -> f64 {
    match cfg.model() {
        ModelName::Interval => 1.5 * TAU / (cfg.ell * cfg.speed.abs()),
        ModelName::InverseSquare => match oscillation_frequency(cfg.gamma) {
            Ok(nu) => 1.5 * TAU / nu,
            Err(_) => 10.0,
        },
        ModelName::Halfline => 10.0,
    }
}

fn period(cfg: &RunConfig) -> Result<Outcome, Error> {
    let model = model_of(cfg)?;
    let group = group_of(cfg);
    let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(cfg));
    let found = period_detect(model.as_ref(), &group, t_max, cfg.tol)?;
    let mut table = Table::new(&["period", "identity_residual"]);
    let mut checks = vec![Check::holds("period found", found.is_some())];
    let mut residual = None;
    if let Some(p) = found {
        let fm = gamma_map(model.as_ref(), &group.eval(p))?;
        let r = disk_samples(100, cfg.seed)
            .into_iter()
            .map(|v| (fm.apply(v) - v).norm())
            .fold(0.0, f64::max);
        checks.push(Check::at_most("flow at the period is the identity", r, 1e-8));
        table.push(vec![num(p), num(r)]);
        residual = Some(r);
    }
    Ok(Outcome::new(
        json!({ "period": found, "t_max": t_max, "identity_residual": residual }),
        checks,
        table,
    ))
}

fn eigen_table(list: &EigenList) -> Table {
    let mut table = Table::new(&["index", "re", "im", "residual"]);
    for e in &list.eigenvalues {
        table.push(vec![e.index.to_string(), num(e.value.re), num(e.value.im), num(e.residual)]);
    }
    table
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, Error> {
    let window = SpectrumWindow::new(cfg.window[0], cfg.window[1], 100_000)?;
    let (kind, list) = match cfg.rho {
        None => ("self-adjoint", interval_sa_spectrum(cfg.ell, cfg.theta, &window)?),
        Some(modulus) => {
            let rho = Complex64::from_polar(modulus, cfg.theta);
            ("dissipative", interval_dissipative_lattice(cfg.ell, rho, &window)?)
        }
    };
    let checks = vec![Check::at_most("eigencondition residual", list.max_residual(), 1e-10)];
    let table = eigen_table(&list);
    Ok(Outcome::new(json!({ "kind": kind, "eigenvalues": list }), checks, table))
}

fn shoot(cfg: &RunConfig) -> Result<Outcome, Error> {
    let list = shoot_negative_eigenvalues(cfg.gamma, cfg.theta, cfg.count)?;
    let values = list.real_values();
    let k = kappa(cfg.gamma)?;
    let adjacent = adjacent_ratio(cfg.gamma)?;
    let mut checks = Vec::new();
    let mut fit = None;
    let mut invariance = None;
    if values.len() >= 2 {
        let f = progression_ratio(&values, k)?;
        checks.push(Check::at_most("consecutive ratio matches kappa", f.relative_deviation, 0.05));
        let inv = scaling_invariance(&values, k);
        if inv.checked > 0 {
            checks.push(Check::at_most("spectrum invariant under kappa scaling", inv.max_relative_error, 1e-6));
        }
        fit = Some(f);
        invariance = Some(inv);
    }
    let table = eigen_table(&list);
    Ok(Outcome::new(
        json!({
            "eigenvalues": list,
            "kappa": k,
            "adjacent_ratio": adjacent,
            "progression": fit,
            "scaling_invariance": invariance,
        }),
        checks,
        table,
    ))
}

fn fk_params(cfg: &RunConfig) -> Result<Outcome, Error> {
    let params = friedrichs_krein_params(cfg.gamma)?;
    let fixed = verify_semibounded_fixed(&InverseSquare::new(cfg.gamma)?, &DEFAULT_T_SAMPLES)?;
    let checks = vec![
        Check::at_most("Friedrichs parameter is fixed", fixed.residual_friedrichs, cfg.tol),
        Check::at_most("Krein parameter is fixed", fixed.residual_krein, cfg.tol),
    ];
    let mut table = Table::new(&["extension", "re", "im", "residual"]);
    table.push(vec![
        "friedrichs".into(),
        num(params.v_friedrichs.re),
        num(params.v_friedrichs.im),
        num(fixed.residual_friedrichs),
    ]);
    table.push(vec![
        "krein".into(),
        num(params.v_krein.re),
        num(params.v_krein.im),
        num(fixed.residual_krein),
    ]);
    Ok(Outcome::new(json!({ "parameters": params, "flow_check": fixed }), checks, table))
}

fn weyl(cfg: &RunConfig) -> Result<Outcome, Error> {
    let ns = cfg.n.clone().unwrap_or_else(|| vec![256]);
    let ts = cfg.t.clone().unwrap_or_else(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect()
    });
    let group = OneParamSubgroup::Translation { speed: cfg.speed };
    let mut table = Table::new(&["n", "t", "s", "residual"]);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &n in &ns {
        let (a, b) = build_interval_grid(cfg.ell, n)?;
        let h = a.grid.h;
        let s = match (cfg.on_grid, cfg.s) {
            (true, Some(s)) => (s / h).round() * h,
            (true, None) => (0.25 * n as f64).round() * h,
            (false, Some(s)) => s,
            (false, None) => cfg.ell / 3.0,
        };
        for &t in &ts {
            let m = weyl_residual(&a, &b, t, s, &group, Propagator::Upwind)?;
            worst = worst.max(m.residual);
            table.push(vec![n.to_string(), num(t), num(s), num(m.residual)]);
            rows.push(json!({ "n": n, "h": h, "t": t, "s": s, "measurement": m }));
        }
    }
    let checks = if cfg.on_grid {
        vec![Check::at_most("on-grid Weyl residual", worst, 1e-12)]
    } else {
        Vec::new()
    };
    Ok(Outcome::new(
        json!({ "variant": if cfg.on_grid { "on-grid" } else { "off-grid" }, "max_residual": worst, "rows": rows }),
        checks,
        table,
    ))
}

fn generator_check(cfg: &RunConfig) -> Result<Outcome, Error> {
    let rep = Representation::for_model(cfg.model().name(), cfg.ell, cfg.gamma)?;
    let ts = cfg.t.clone().unwrap_or_else(|| vec![0.3, 1.0]);
    let limit = match rep {
        Representation::IntervalTranslation { .. } => 1e-8,
        _ => 1e-6,
    };
    let mut table = Table::new(&["t", "scale", "expected_scale", "residual", "residual_expected"]);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &t in &ts {
        let r = generator_invariance_residual(&rep, t, &TestFunction::ALL)?;
        checks.push(Check::at_most(format!("generator residual at t={t}"), r.residual, limit));
        checks.push(Check::at_most(
            format!("fitted scale at t={t}"),
            (r.scale - r.expected_scale).norm(),
            1e-6,
        ));
        table.push(vec![num(t), num(r.scale.re), num(r.expected_scale), num(r.residual), num(r.residual_expected)]);
        rows.push(r);
    }
    Ok(Outcome::new(json!({ "checks": rows }), checks, table))
}

fn refine(cfg: &RunConfig) -> Result<Outcome, Error> {
    let ns = cfg.n.clone().unwrap_or_else(|| vec![128, 256, 512, 1024]);
    let ts = cfg.t.clone().unwrap_or_else(|| vec![0.7, 2.3, -1.1]);
    let study = refinement_study(&RefinementConfig::standard(cfg.ell, ns, ts))?;
    let mut checks = Vec::new();
    for (variant, order) in &study.orders {
        let check = match (variant, order) {
            (_, ConvergenceOrder::Exact) => Check::holds(format!("{} residuals exact", variant.name()), true),
            (Variant::OnGrid, ConvergenceOrder::Fitted(_)) => {
                Check::at_most("on-grid residual", study.table.max_residual(Variant::OnGrid), 1e-12)
            }
            (Variant::OffGrid, ConvergenceOrder::Fitted(p)) => Check::at_least("off-grid convergence order", *p, 0.9),
        };
        checks.push(check);
    }
    let mut table = Table::new(&["n", "h", "t", "s", "variant", "residual"]);
    for r in &study.table.rows {
        table.push(vec![
            r.n.to_string(),
            num(r.h),
            num(r.t),
            num(r.s),
            r.variant.name().into(),
            num(r.residual),
        ]);
    }
    Ok(Outcome::new(to_value(&study), checks, table))
}

fn certify(cfg: &RunConfig) -> Result<Outcome, Error> {
    let n = cfg.n.as_ref().map_or(256, |ns| ns[0]);
    let cert = nonequivalence_certificate(cfg.ell, cfg.ell2, n, cfg.tol)?;
    let checks = vec![Check::holds("nilpotency indices separate the lengths", cert.separated)];
    let mut table = Table::new(&["ell", "n", "h", "s_star", "monotone"]);
    for e in [&cert.first, &cert.second] {
        table.push(vec![num(e.ell), e.n.to_string(), num(e.h), num(e.s_star), e.monotone.to_string()]);
    }
    Ok(Outcome::new(to_value(&cert), checks, table))
}

fn all() -> Outcome {
    let results = suite::run_all();
    let mut checks = Vec::new();
    let mut table = Table::new(&["criterion", "title", "passed", "checks"]);
    let mut timings = BTreeMap::new();
    for r in &results {
        for c in &r.checks {
            let mut c = c.clone();
            c.name = format!("criterion {}: {}", r.id, c.name);
            checks.push(c);
        }
        if !r.passed && r.checks.iter().all(|c| c.passed) {
            checks.push(Check::at_most(format!("criterion {}: runtime", r.id), r.seconds, r.budget));
        }
        table.push(vec![r.id.to_string(), r.title.into(), r.passed.to_string(), r.checks.len().to_string()]);
        timings.insert(format!("criterion {}", r.id), r.seconds);
    }
    Outcome {
        results: to_value(&results),
        checks,
        table,
        timings,
    }
}
