//! Mild-solution time stepping for the d = 1 nonlinear problem on the torus.
//!
//! One step of size `dt` solves the midpoint fixed point
//! `z = P(dt/2) w + dt/2 Theta[V[z]] z` by Picard iteration and sets
//! `w(dt) = P(dt/2) (2 z - P(dt/2) w)`, where `P` is the linear propagator.
//! This is the midpoint rule for the Duhamel integral with the stage value taken
//! half-way along the segment between `w` and the new iterate after pulling both back
//! to the midpoint by `P`.

use thiserror::Error;

use crate::kernel::{propagate_linear, KernelError, ResolutionWarning};
use crate::params::ParameterSet;
use crate::phase_state::WignerState;
use crate::potential::torus_field_of_density;
use crate::scalar::Real;
use crate::theta_ops::{theta_apply, ThetaError};

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("Picard iteration did not contract at t = {t} with dt = {dt} after {iterations} iterations")]
    NonContraction { t: f64, dt: f64, iterations: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig<T> {
    pub dt: T,
    pub t_end: T,
    /// Picard stops once the X-norm increment is below `picard_tol * ||z||_X`.
    pub picard_tol: T,
    pub picard_max: usize,
    /// Each failed step is retried as two half steps, at most this many levels deep.
    pub max_halvings: usize,
    /// Diagnostics row every this many accepted steps (and at the end).
    pub monitor_every: usize,
    pub nonlinear: bool,
}

impl<T: Real> Default for EvolveConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::of(0.01),
            t_end: T::one(),
            picard_tol: T::of(1e-10),
            picard_max: 25,
            max_halvings: 8,
            monitor_every: 1,
            nonlinear: true,
        }
    }
}

impl<T: Real> EvolveConfig<T> {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let pos = |x: T| x.is_finite() && x > T::zero();
        if !pos(self.dt) {
            return Err(EvolveError::Config("dt must be positive".into()));
        }
        if !(self.t_end.is_finite() && self.t_end >= T::zero()) {
            return Err(EvolveError::Config("t_end must be non-negative".into()));
        }
        if !pos(self.picard_tol) || self.picard_max == 0 || self.monitor_every == 0 {
            return Err(EvolveError::Config("picard_tol, picard_max and monitor cadence must be positive".into()));
        }
        Ok(())
    }
}

/// One monitored sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub l2: f64,
    pub v1: f64,
    pub v2: f64,
    pub x_norm: f64,
    pub density_l2: f64,
    pub field_l2: f64,
    pub picard_iters: usize,
}

pub const DIAGNOSTIC_COLUMNS: &str = "t,norm_l2,norm_v,norm_v2,norm_x,density_l2,field_l2,picard_iters";

impl DiagnosticRow {
    pub fn of<T: Real>(w: &WignerState<T>, picard_iters: usize) -> Self {
        let n = w.density();
        let hx = w.grid.hx();
        let l2 = |s: &[T]| (s.iter().fold(T::zero(), |a, &x| a + x * x) * hx).sqrt().f64();
        let (_, e) = torus_field_of_density(n.as_slice().unwrap(), w.grid.lx());
        Self {
            t: w.time.f64(),
            l2: w.norm_l2().f64(),
            v1: w.norm_weighted(1).f64(),
            v2: w.norm_weighted(2).f64(),
            x_norm: w.norm_x().f64(),
            density_l2: l2(n.as_slice().unwrap()),
            field_l2: l2(&e.samples()),
            picard_iters,
        }
    }

    pub fn csv(&self) -> String {
        format!(
            "{:.10e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            self.t, self.l2, self.v1, self.v2, self.x_norm, self.density_l2, self.field_l2, self.picard_iters
        )
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome<T: Real> {
    pub state: WignerState<T>,
    pub iterations: usize,
    /// X-norm increments of successive Picard iterates.
    pub increments: Vec<T>,
    pub warning: Option<ResolutionWarning>,
}

/// `Theta[V[z]] z` with `V[z]` the torus potential of the neutralised density of `z`.
pub fn nonlinearity<T: Real>(z: &WignerState<T>) -> Result<WignerState<T>, EvolveError> {
    let n = z.density();
    let (v, _) = torus_field_of_density(n.as_slice().unwrap(), z.grid.lx());
    Ok(theta_apply(&v, z)?)
}

/// One step of size `dt`.
pub fn duhamel_step<T: Real>(
    w: &WignerState<T>,
    p: &ParameterSet<T>,
    dt: T,
    picard_tol: T,
    picard_max: usize,
) -> Result<StepOutcome<T>, EvolveError> {
    let half_dt = dt * T::of(0.5);
    let pre = propagate_linear(w, p, half_dt)?;
    let half = pre.state;
    let mut z = half.clone();
    let mut increments = Vec::new();
    let mut converged = false;
    for k in 0..picard_max {
        let z_new = half.axpy(half_dt, &nonlinearity(&z)?);
        let inc = z_new.axpy(-T::one(), &z).norm_x();
        let scale = z_new.norm_x();
        increments.push(inc);
        z = z_new;
        if !inc.is_finite() {
            break;
        }
        if inc <= picard_tol * scale {
            converged = true;
            break;
        }
        if k >= 2 && inc > increments[k - 1] && increments[k - 1] > increments[k - 2] {
            break;
        }
    }
    if !converged {
        return Err(EvolveError::NonContraction { t: w.time.f64(), dt: dt.f64(), iterations: increments.len() });
    }
    let post = propagate_linear(&z.scale(T::of(2.0)).axpy(-T::one(), &half), p, half_dt)?;
    let mut state = post.state;
    state.time = w.time + dt;
    Ok(StepOutcome { state, iterations: increments.len(), increments, warning: pre.warning.or(post.warning) })
}

fn advance<T: Real>(
    w: &WignerState<T>,
    p: &ParameterSet<T>,
    dt: T,
    cfg: &EvolveConfig<T>,
    depth: usize,
    halvings: &mut usize,
) -> Result<StepOutcome<T>, EvolveError> {
    if !cfg.nonlinear {
        let out = propagate_linear(w, p, dt)?;
        return Ok(StepOutcome { state: out.state, iterations: 0, increments: vec![], warning: out.warning });
    }
    match duhamel_step(w, p, dt, cfg.picard_tol, cfg.picard_max) {
        Err(EvolveError::NonContraction { .. }) if depth < cfg.max_halvings => {
            *halvings += 1;
            let h = dt * T::of(0.5);
            let a = advance(w, p, h, cfg, depth + 1, halvings)?;
            let b = advance(&a.state, p, h, cfg, depth + 1, halvings)?;
            Ok(StepOutcome {
                state: b.state,
                iterations: a.iterations.max(b.iterations),
                increments: b.increments,
                warning: a.warning.or(b.warning),
            })
        }
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T: Real> {
    pub state: WignerState<T>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub warnings: Vec<ResolutionWarning>,
    pub halvings: usize,
    /// Samples where `||w(t)||_2 > e^{d beta t / 2} ||w0||_2 (1 + 1e-3)`.
    pub l2_bound_violations: usize,
}

/// Relative slack of the monitored L2 growth bound.
pub const L2_BOUND_SLACK: f64 = 1e-3;

/// Runs from `w0` to `cfg.t_end`. `observer` sees every monitored state.
pub fn run<T: Real>(
    w0: &WignerState<T>,
    p: &ParameterSet<T>,
    cfg: &EvolveConfig<T>,
    mut observer: impl FnMut(&WignerState<T>, &DiagnosticRow),
) -> Result<RunOutcome<T>, EvolveError> {
    cfg.validate()?;
    w0.check_finite().map_err(KernelError::from)?;
    let l2_0 = w0.norm_l2().f64();
    let t0 = w0.time;
    let rate = p.mass_growth_rate().f64() * 0.5;
    let mut w = w0.clone();
    let mut rows = vec![DiagnosticRow::of(&w, 0)];
    observer(&w, &rows[0]);
    let mut warnings = Vec::new();
    let mut halvings = 0;
    let mut violations = 0;
    let mut step = 0usize;
    let eps = cfg.dt * T::of(1e-9);
    while w.time - t0 < cfg.t_end - eps {
        let h = cfg.dt.min(cfg.t_end - (w.time - t0));
        let out = advance(&w, p, h, cfg, 0, &mut halvings)?;
        if let Some(wr) = out.warning {
            if warnings.is_empty() {
                warnings.push(wr);
            }
        }
        w = out.state;
        w.check_finite().map_err(KernelError::from)?;
        step += 1;
        let last = w.time - t0 >= cfg.t_end - eps;
        if step % cfg.monitor_every == 0 || last {
            let row = DiagnosticRow::of(&w, out.iterations);
            let bound = (rate * (w.time - t0).f64()).exp() * l2_0 * (1.0 + L2_BOUND_SLACK);
            if row.l2 > bound {
                violations += 1;
            }
            observer(&w, &row);
            rows.push(row);
        }
    }
    Ok(RunOutcome { state: w, diagnostics: rows, warnings, halvings, l2_bound_violations: violations })
}

/// Finite-difference growth of `||v w||_2^2` between two samples next to its budget
/// `2 (d sigma ||w||_2^2 + beta/2 ||v w||_2^2)` taken at the larger endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSample {
    pub t: f64,
    pub rate: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedReport {
    /// Largest `sample / initial` over the series for `||v w||_2` and `||v^2 w||_2`.
    pub growth_v1: f64,
    pub growth_v2: f64,
    pub finite: bool,
    pub budget: Vec<BudgetSample>,
}

impl WeightedReport {
    pub fn bounded(&self, ceiling: f64) -> bool {
        self.finite && self.growth_v1 <= ceiling && self.growth_v2 <= ceiling
    }

    /// Worst `rate - budget` over the series.
    pub fn budget_excess(&self) -> f64 {
        self.budget.iter().map(|b| b.rate - b.budget).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn weighted_monitors<T: Real>(series: &[DiagnosticRow], p: &ParameterSet<T>) -> WeightedReport {
    let growth = |f: fn(&DiagnosticRow) -> f64| {
        let w0 = f(&series[0]);
        series.iter().map(|r| if w0 > 0.0 { f(r) / w0 } else if f(r) == 0.0 { 0.0 } else { f64::INFINITY }).fold(0.0, f64::max)
    };
    let d = p.dim.get() as f64;
    let (sigma, beta) = (p.sigma.f64(), p.beta.f64());
    let budget = series
        .windows(2)
        .map(|ab| {
            let (a, b) = (&ab[0], &ab[1]);
            let rate = (b.v1 * b.v1 - a.v1 * a.v1) / (b.t - a.t);
            let l2 = a.l2.max(b.l2);
            let v1 = a.v1.max(b.v1);
            BudgetSample { t: a.t, rate, budget: 2.0 * (d * sigma * l2 * l2 + 0.5 * beta * v1 * v1) }
        })
        .collect();
    WeightedReport {
        growth_v1: growth(|r| r.v1),
        growth_v2: growth(|r| r.v2),
        finite: series.iter().all(|r| r.v1.is_finite() && r.v2.is_finite() && r.x_norm.is_finite()),
        budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Dim;
    use crate::phase_state::{gaussian, PhaseGrid};

    fn setup(n: usize) -> (ParameterSet<f64>, WignerState<f64>) {
        let p = ParameterSet::fp(1.0, 1.0, 0.0, 1.0, Dim::One).unwrap();
        let g = PhaseGrid::new(n, n, 10.0, 8.0).unwrap();
        (p, gaussian(&g, 1.0, 0.0, 0.0, 1.0, 1.0))
    }

    #[test]
    fn zero_state_stays_zero() {
        let (p, w) = setup(32);
        let z = w.scale(0.0);
        let s = duhamel_step(&z, &p, 0.01, 1e-12, 25).unwrap();
        assert_eq!(s.state.max_abs(), 0.0);
    }

    #[test]
    fn picard_contracts() {
        let (p, w) = setup(64);
        let s = duhamel_step(&w, &p, 0.01, 1e-13, 25).unwrap();
        for k in 1..s.increments.len() {
            assert!(s.increments[k] < 0.5 * s.increments[k - 1]);
        }
    }

    #[test]
    fn mass_is_conserved_by_a_step() {
        let p = ParameterSet::fp(1.0, 0.0, 0.0, 1.0, Dim::One).unwrap();
        let (_, w) = setup(64);
        let s = duhamel_step(&w, &p, 0.05, 1e-12, 25).unwrap();
        assert!((s.state.mass() - w.mass()).abs() < 1e-10 * w.mass());
    }

    #[test]
    fn linear_mode_matches_propagator() {
        let (p, w) = setup(32);
        let cfg = EvolveConfig { dt: 0.1, t_end: 0.3, nonlinear: false, ..Default::default() };
        let out = run(&w, &p, &cfg, |_, _| {}).unwrap();
        let direct = propagate_linear(&w, &p, 0.3).unwrap().state;
        let rel = out.state.axpy(-1.0, &direct).norm_l2() / direct.norm_l2();
        // composition is exact up to the periodisation and dilation truncation of the grid
        assert!(rel < 1e-8, "{rel:e}");
        assert_eq!(out.diagnostics.len(), 4);
    }

    #[test]
    fn large_amplitude_forces_halving_or_error() {
        let (p, w) = setup(32);
        let big = w.scale(2e3);
        let cfg = EvolveConfig { dt: 0.05, t_end: 0.05, picard_max: 6, max_halvings: 1, ..Default::default() };
        let r = run(&big, &p, &cfg, |_, _| {});
        match r {
            Ok(o) => assert!(o.halvings > 0),
            Err(e) => assert!(matches!(e, EvolveError::NonContraction { .. })),
        }
    }

    #[test]
    fn invalid_config() {
        let (p, w) = setup(32);
        let cfg = EvolveConfig { dt: -1.0, ..Default::default() };
        assert!(matches!(run(&w, &p, &cfg, |_, _| {}), Err(EvolveError::Config(_))));
    }

    #[test]
    fn tiny_amplitude_is_linear() {
        let (p, w) = setup(32);
        let w = w.scale(1e-8 / w.norm_l2());
        let s = duhamel_step(&w, &p, 0.01, 1e-12, 25).unwrap();
        let lin = propagate_linear(&w, &p, 0.01).unwrap().state;
        assert!(s.state.axpy(-1.0, &lin).norm_l2() < 1e-15);
    }

    #[test]
    fn zero_state_monitors_vanish() {
        let (p, w) = setup(32);
        let cfg = EvolveConfig { dt: 0.1, t_end: 0.2, ..Default::default() };
        let out = run(&w.scale(0.0), &p, &cfg, |_, _| {}).unwrap();
        let rep = weighted_monitors(&out.diagnostics, &p);
        assert_eq!((rep.growth_v1, rep.growth_v2), (0.0, 0.0));
        assert!(out.diagnostics.iter().all(|r| r.l2 == 0.0 && r.v2 == 0.0 && r.field_l2 == 0.0));
    }

    #[test]
    fn compact_velocity_support_respects_budget() {
        let (p, _) = setup(64);
        let g = PhaseGrid::new(64, 64, 10.0, 8.0).unwrap();
        let w = WignerState::from_fn(&g, |x: f64, v: f64| {
            let b = 1.0 - v * v / 4.0;
            if b > 0.0 { b.powi(4) * (-x * x).exp() } else { 0.0 }
        });
        let cfg = EvolveConfig { dt: 0.01, t_end: 0.5, nonlinear: false, ..Default::default() };
        let out = run(&w, &p, &cfg, |_, _| {}).unwrap();
        let rep = weighted_monitors(&out.diagnostics, &p);
        assert!(rep.budget_excess() <= 1e-6, "{}", rep.budget_excess());
        assert!(rep.bounded(10.0));
    }

    #[test]
    fn timestamps_increase() {
        let (p, w) = setup(32);
        let cfg = EvolveConfig { dt: 0.03, t_end: 0.1, ..Default::default() };
        let out = run(&w, &p, &cfg, |_, _| {}).unwrap();
        assert!(out.diagnostics.windows(2).all(|a| a[1].t > a[0].t));
        assert!((out.diagnostics.last().unwrap().t - 0.1).abs() < 1e-12);
    }
}
