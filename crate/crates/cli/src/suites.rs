//! Verification suites. Each returns one row per asserted estimate.
//!
//! Scenarios are fixed; only `seed`, `cases` and `omegas` reach them.

use wpfp_core::dispersive::{dispersive_suite_with, CheckKind, EstimateCheck};
use wpfp_core::evolve::{duhamel_step, run, EvolveConfig};
use wpfp_core::fit::{logspace, PowerFit};
use wpfp_core::kernel::{coefficients, gradient_bound_check, propagate_by_quadrature, propagate_linear, smoothing_gain_slope};
use wpfp_core::params::{Dim, ParameterSet};
use wpfp_core::phase_state::{gaussian, PhaseGrid, WignerState};
use wpfp_core::potential::TorusField;
use wpfp_core::rng::CounterRng;
use wpfp_core::theta_ops::{semiclassical_order, theta_apply, theta_via_gamma, weighted_decomposition_residual};
use wpfp_core::{Grid, Params, State};

pub type SuiteResult = Result<Vec<EstimateCheck>, String>;

fn fp(a: f64, b: f64, g: f64, s: f64) -> Params {
    ParameterSet::fp(a, b, g, s, Dim::One).expect("admissible reference parameters")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rel_l2(a: &State, b: &State) -> f64 {
    a.axpy(-1.0, b).norm_l2() / b.norm_l2()
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> EstimateCheck {
    EstimateCheck { name: name.into(), value, target, tol, r2: None, kind: CheckKind::Match, passed: (value - target).abs() <= tol }
}

fn fitted(name: &str, fit: &PowerFit, target: f64, tol: f64) -> EstimateCheck {
    EstimateCheck::exponent(name, fit, target, CheckKind::Match).with_tol(tol)
}

pub fn random_params(rng: &mut CounterRng) -> Params {
    loop {
        let (a, s, b) = (rng.range(0.2, 2.0), rng.range(0.2, 2.0), rng.range(0.0, 2.0));
        let room = a * s - b * b / 16.0;
        if room > 0.0 {
            if let Ok(p) = ParameterSet::fp(a, b, rng.range(-1.0, 1.0) * room.sqrt(), s, Dim::One) {
                return p;
            }
        }
    }
}

/// Three signed Gaussian bumps.
pub fn random_state(grid: &Grid, rng: &mut CounterRng) -> State {
    (0..3).fold(WignerState::zeros(grid), |w, _| {
        let b = gaussian(grid, rng.range(-1.0, 1.0), rng.range(-3.0, 3.0), rng.range(-2.0, 2.0), rng.range(0.5, 1.5), rng.range(0.5, 1.5));
        w.axpy(1.0, &b)
    })
}

/// Four random Fourier modes on `[-lx, lx)`.
pub fn random_potential(n: usize, lx: f64, rng: &mut CounterRng) -> TorusField<f64> {
    let modes: Vec<(f64, f64, f64)> = (1..=4).map(|m| (m as f64, rng.normal() / m as f64, rng.range(0.0, 6.3))).collect();
    TorusField::from_fn(n, lx, move |x| modes.iter().map(|&(m, a, ph)| a * (m * std::f64::consts::PI * x / lx + ph).cos()).sum())
}

pub fn kernel_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut out = Vec::new();

    let (a, b, g, s, t) = (1.0, 1.0, 0.3, 1.0, 1e-3);
    let k = coefficients(&fp(a, b, g, s), t).map_err(err)?;
    for (name, r) in [
        ("asymptotic_lambda", k.lambda / (a * t)),
        ("asymptotic_nu", k.nu / (s * t)),
        ("asymptotic_mu", k.mu / (-2.0 * g * t)),
        ("asymptotic_f", k.f / (4.0 * (a * s - g * g) * t * t)),
        ("asymptotic_R", k.r / (2.0 * a * t)),
        ("asymptotic_vartheta", k.vartheta / t),
    ] {
        out.push(within(name, r, 1.0, 0.01));
    }

    let grid = PhaseGrid::new(64, 64, 8.0, 8.0).map_err(err)?;
    let w0 = gaussian(&grid, 1.0, 0.5, -0.3, 1.0, 0.8);
    let p = fp(1.0, 1.0, 0.3, 1.0);
    let spectral = propagate_linear(&w0, &p, 0.5).map_err(err)?.state;
    let oracle = propagate_by_quadrature(&w0, &p, 0.5, 3).map_err(err)?;
    out.push(EstimateCheck::bound("green_oracle_rel_l2", rel_l2(&spectral, &oracle), 1e-4, 0.0));
    out.push(EstimateCheck::bound("mass_drift", (spectral.mass() / w0.mass() - 1.0).abs(), 1e-8, 0.0));

    let grid = PhaseGrid::new(64, 64, 10.0, 10.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for case in 0..cases as u64 {
        let mut rng = CounterRng::stream(seed, case);
        let p = random_params(&mut rng);
        let w = random_state(&grid, &mut rng);
        for t in [0.1, 0.5, 1.0] {
            let wt = propagate_linear(&w, &p, t).map_err(err)?.state;
            worst = worst.max(wt.norm_x() / (4.0 * (p.kappa() * t).exp() * w.norm_x()));
        }
    }
    out.push(EstimateCheck::bound("semigroup_x_ratio", worst, 1.0, 0.0));

    let p = fp(1.0, 1.0, 0.0, 1.0);
    let times = logspace(1e-3, 1e-1, 9);
    let probe = PhaseGrid::new(4, 512, 4.0, 12.0).map_err(err)?;
    let etas: Vec<f64> = (0..32).map(|i| 0.5 * 1.15f64.powi(i)).collect();
    let (fit, _) = smoothing_gain_slope(&probe, &p, &times, &etas, 2.0).map_err(err)?;
    out.push(fitted("smoothing_gain_slope", &fit, -0.5, 0.05));

    let sample_grid = PhaseGrid::new(64, 64, 4.0, 4.0).map_err(err)?;
    let samples: Vec<(f64, f64)> = (0..64).flat_map(|i| (0..64).map(move |j| (i, j))).map(|(i, j)| (sample_grid.x(i), sample_grid.v(j))).collect();
    let report = gradient_bound_check(&p, &times, &samples).map_err(err)?;
    out.push(EstimateCheck {
        name: "gradient_pointwise_b".into(),
        value: report.b,
        target: f64::INFINITY,
        tol: 0.0,
        r2: None,
        kind: CheckKind::AtMost,
        passed: report.b.is_finite(),
    });

    let grid = PhaseGrid::new(64, 64, 8.0, 8.0).map_err(err)?;
    let w0 = gaussian(&grid, 1.0, 0.0, 0.0, 1.0, 1.0);
    let step = duhamel_step(&w0, &p, 0.01, 1e-13, 25).map_err(err)?;
    let ratio = step.increments.windows(2).map(|a| a[1] / a[0]).fold(0.0, f64::max);
    out.push(EstimateCheck { passed: ratio < 0.5, ..EstimateCheck::bound("picard_increment_ratio", ratio, 0.5, 0.0) });
    let solve = |dt: f64| {
        let cfg = EvolveConfig { dt, t_end: 0.4, picard_tol: 1e-13, ..Default::default() };
        run(&w0, &p, &cfg, |_, _| {}).map(|o| o.state).map_err(err)
    };
    let reference = solve(0.0025)?;
    // error after halving dt, relative to before; at most 1 / 1.8
    let shrink = rel_l2(&solve(0.02)?, &reference) / rel_l2(&solve(0.04)?, &reference);
    out.push(EstimateCheck::bound("step_halving_error_ratio", shrink, 1.0 / 1.8, 0.0));
    Ok(out)
}

pub fn theta_suite(seed: u64, cases: usize) -> SuiteResult {
    let grid = PhaseGrid::new(64, 256, 8.0, 16.0).map_err(err)?;
    let (mut skew, mut div, mut weighted): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..cases as u64 {
        let mut rng = CounterRng::stream(seed ^ 0x5, case);
        let v = random_potential(grid.nx(), grid.lx(), &mut rng);
        let w = random_state(&grid, &mut rng);
        let tw = theta_apply(&v, &w).map_err(err)?;
        skew = skew.max(tw.inner(&w).abs() / w.norm_l2().powi(2));
        div = div.max(tw.axpy(-1.0, &theta_via_gamma(&v, &w).map_err(err)?).norm_l2() / w.norm_l2());
        weighted = weighted.max(weighted_decomposition_residual(&v, &w).map_err(err)?);
    }
    let mut out = vec![
        EstimateCheck::bound("theta_skew", skew, 1e-10, 0.0),
        EstimateCheck::bound("theta_divergence_form", div, 1e-8, 0.0),
        EstimateCheck::bound("theta_weighted_decomposition", weighted, 1e-8, 0.0),
    ];
    let grid = PhaseGrid::new(128, 128, 8.0, 8.0).map_err(err)?;
    let pi = std::f64::consts::PI;
    let v = TorusField::from_fn(grid.nx(), grid.lx(), |x: f64| (pi * x / 8.0).cos() + 0.3 * (pi * x / 4.0).sin());
    let w = gaussian(&grid, 1.0, 0.0, 0.0, 1.0, 1.0);
    let (fit, _) = semiclassical_order(&v, &w, &[0.4, 0.2, 0.1, 0.05]).map_err(err)?;
    out.push(fitted("semiclassical_order", &fit, 2.0, 0.2));
    Ok(out)
}

pub fn dispersive(omegas: &[f64]) -> SuiteResult {
    dispersive_suite_with(omegas).map_err(err)
}
