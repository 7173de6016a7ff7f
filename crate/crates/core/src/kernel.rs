//! Fundamental solution of the linear Fokker-Planck operator and the linear propagator.
//!
//! With `theta(t) = (1 - e^{-beta t}) / beta` and the characteristic flow
//! `X_t = x + theta(t) v`, `V_t = e^{-beta t} v`, the Green's function is
//! `G = e^{d beta t} F(t, X_{-t}(x, v) - x0, V_{-t}(x, v) - v0)` where `F` is the
//! centred Gaussian with quadratic form `(nu |x|^2 + lambda |v|^2 + mu x.v) / f`.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::fit::{loglog_fit, PowerFit};
use crate::params::ParameterSet;
use crate::phase_state::{PhaseGrid, StateError, WignerState};
use crate::scalar::Real;
use crate::spectral;

/// Below this `|beta t|` the coefficients are summed from their Taylor series.
const SERIES_THRESHOLD: f64 = 0.1;
const SERIES_TERMS: usize = 24;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("kernel coefficients overflow at t = {0}")]
    Overflow(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Kernel coefficients at time `t`, plus the forward covariance `(sxx, sxv, svv)`
/// of the transition density (per coordinate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCoefficients<T> {
    pub t: T,
    pub lambda: T,
    pub nu: T,
    pub mu: T,
    /// `4 lambda nu - mu^2`
    pub f: T,
    /// Variance of the x-marginal, equal to `sxx`.
    pub r: T,
    pub vartheta: T,
    pub sxx: T,
    pub sxv: T,
    pub svv: T,
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |a, k| a * T::of(k as f64))
}

fn series<T: Real>(x: T, coef: impl Fn(usize) -> T) -> T {
    let mut s = T::zero();
    let mut xp = T::one();
    for j in 0..SERIES_TERMS {
        s = s + coef(j) * xp;
        xp = xp * x;
    }
    s
}

/// `(e^y - 1) / y`
fn e1<T: Real>(y: T) -> T {
    series(y, |k| T::one() / factorial::<T>(k + 1))
}

/// Computes the kernel coefficients. `t = 0` gives all zeros.
pub fn coefficients<T: Real>(p: &ParameterSet<T>, t: T) -> Result<KernelCoefficients<T>, KernelError> {
    if t < T::zero() || t.is_nan() {
        return Err(KernelError::NegativeTime(t.f64()));
    }
    let k = if (p.beta * t).abs() < T::of(SERIES_THRESHOLD) { by_series(p, t) } else { closed_form(p, t) };
    if [k.lambda, k.nu, k.mu, k.f, k.r].iter().any(|v| !v.is_finite()) {
        return Err(KernelError::Overflow(t.f64()));
    }
    Ok(k)
}

#[allow(clippy::too_many_arguments)]
fn assemble<T: Real>(p: &ParameterSet<T>, t: T, lambda: T, nu: T, mu: T, r: T, vartheta: T, svv: T) -> KernelCoefficients<T> {
    let two = T::of(2.0);
    let f = T::of(4.0) * lambda * nu - mu * mu;
    let sxv = two * p.gamma * vartheta + p.sigma * vartheta * vartheta;
    KernelCoefficients { t, lambda, nu, mu, f, r, vartheta, sxx: r, sxv, svv }
}

fn by_series<T: Real>(p: &ParameterSet<T>, t: T) -> KernelCoefficients<T> {
    let (a, g, s) = (p.alpha, p.gamma, p.sigma);
    let x = p.beta * t;
    let two = T::of(2.0);
    let four = T::of(4.0);
    let t2 = t * t;
    let t3 = t2 * t;
    let em = e1(x);
    let vartheta = t * e1(-x);
    let nu = s * t * e1(two * x);
    let mu = s * t2 * em * em - two * g * t * em;
    let lam_s = series(x, |j| (two.powi(j as i32 + 3) - four) / (two * factorial::<T>(j + 3)));
    let lam_g = series(x, |j| T::one() / factorial::<T>(j + 2));
    let lambda = a * t + s * t3 * lam_s - two * g * t2 * lam_g;
    let r_s = series(x, |j| {
        let sign = if (j + 3) % 2 == 0 { T::one() } else { -T::one() };
        (four * sign - sign * two.powi(j as i32 + 3)) / factorial::<T>(j + 3)
    });
    let r_g = series(x, |j| {
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        sign / factorial::<T>(j + 2)
    });
    let r = two * a * t + s * t3 * r_s + four * g * t2 * r_g;
    let svv = two * s * t * e1(-two * x);
    assemble(p, t, lambda, nu, mu, r, vartheta, svv)
}

fn closed_form<T: Real>(p: &ParameterSet<T>, t: T) -> KernelCoefficients<T> {
    let (a, b, g, s) = (p.alpha, p.beta, p.gamma, p.sigma);
    let x = b * t;
    let two = T::of(2.0);
    let four = T::of(4.0);
    let am = x.exp_m1() / b;
    let ex = x.exp();
    let emx = (-x).exp();
    let vartheta = -(-x).exp_m1() / b;
    let nu = s * (two * x).exp_m1() / (two * b);
    let mu = s * am * am - two * g * am;
    let b2 = b * b;
    let b3 = b2 * b;
    let lambda = a * t + s * ((ex * ex - four * ex + T::of(3.0)) / (two * b3) + t / b2) + g * (two * t / b - two * am / b);
    let r = two * a * t + s * (four * emx - emx * emx + two * x - T::of(3.0)) / b3 + four * g * (emx + x - T::one()) / b2;
    let svv = -s * (-two * x).exp_m1() / b;
    assemble(p, t, lambda, nu, mu, r, vartheta, svv)
}

/// Characteristic flow of `-v.grad_x + beta div_v(v .)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicFlow<T> {
    pub t: T,
    pub beta: T,
}

impl<T: Real> CharacteristicFlow<T> {
    pub fn new(t: T, beta: T) -> Self {
        Self { t, beta }
    }

    /// `theta(t) = (1 - e^{-beta t}) / beta`
    pub fn vartheta(&self) -> T {
        let x = self.beta * self.t;
        if x.abs() < T::of(SERIES_THRESHOLD) {
            self.t * e1(-x)
        } else {
            -(-x).exp_m1() / self.beta
        }
    }

    /// `(e^{beta t} - 1) / beta`, the x-shift per unit velocity of the backward flow.
    pub fn backward_shift(&self) -> T {
        let x = self.beta * self.t;
        if x.abs() < T::of(SERIES_THRESHOLD) {
            self.t * e1(x)
        } else {
            x.exp_m1() / self.beta
        }
    }

    pub fn forward(&self, x: T, v: T) -> (T, T) {
        (x + self.vartheta() * v, v * (-self.beta * self.t).exp())
    }

    pub fn backward(&self, x: T, v: T) -> (T, T) {
        (x - self.backward_shift() * v, v * (self.beta * self.t).exp())
    }

    /// Jacobian `e^{d beta t}` of the backward flow in `2d` phase-space dimensions.
    pub fn jacobian(&self, dim: usize) -> T {
        (T::of(dim as f64) * self.beta * self.t).exp()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn quad_form<T: Real>(k: &KernelCoefficients<T>, x: &[T], v: &[T]) -> T {
    k.nu * dot(x, x) + k.lambda * dot(v, v) + k.mu * dot(x, v)
}

/// `F(t, x, v) = (2 pi)^{-d} f^{-d/2} exp(-(nu |x|^2 + lambda |v|^2 + mu x.v) / f)`, `d = x.len()`.
pub fn green_f<T: Real>(k: &KernelCoefficients<T>, x: &[T], v: &[T]) -> T {
    let d = T::of(x.len() as f64);
    let two = T::of(2.0);
    (-d * T::TAU().ln() - d / two * k.f.ln() - quad_form(k, x, v) / k.f).exp()
}

fn pulled_back<T: Real>(p: &ParameterSet<T>, t: T, x: &[T], v: &[T], x0: &[T], v0: &[T]) -> (Vec<T>, Vec<T>) {
    let flow = CharacteristicFlow::new(t, p.beta);
    let a = flow.backward_shift();
    let eb = (p.beta * t).exp();
    let y = (0..x.len()).map(|i| x[i] - a * v[i] - x0[i]).collect();
    let u = (0..x.len()).map(|i| eb * v[i] - v0[i]).collect();
    (y, u)
}

/// Green's function `G(t, x, v; x0, v0)`.
pub fn green_g<T: Real>(p: &ParameterSet<T>, k: &KernelCoefficients<T>, x: &[T], v: &[T], x0: &[T], v0: &[T]) -> T {
    let (y, u) = pulled_back(p, k.t, x, v, x0, v0);
    CharacteristicFlow::new(k.t, p.beta).jacobian(x.len()) * green_f(k, &y, &u)
}

/// Analytic `grad_v G`.
pub fn grad_v_green<T: Real>(
    p: &ParameterSet<T>,
    k: &KernelCoefficients<T>,
    x: &[T],
    v: &[T],
    x0: &[T],
    v0: &[T],
) -> Vec<T> {
    let g = green_g(p, k, x, v, x0, v0);
    let (y, u) = pulled_back(p, k.t, x, v, x0, v0);
    let (cy, cu) = grad_coeffs(p, k);
    (0..x.len()).map(|i| -g / k.f * (cy * y[i] + cu * u[i])).collect()
}

fn grad_coeffs<T: Real>(p: &ParameterSet<T>, k: &KernelCoefficients<T>) -> (T, T) {
    let flow = CharacteristicFlow::new(k.t, p.beta);
    let a = flow.backward_shift();
    let eb = (p.beta * k.t).exp();
    let two = T::of(2.0);
    (k.mu * eb - two * k.nu * a, two * k.lambda * eb - k.mu * a)
}

/// `int G dv = R^{-d/2} N((x - x0 - theta v0) / sqrt R)` with `N` the standard Gaussian density.
pub fn marginal_x<T: Real>(k: &KernelCoefficients<T>, x: &[T], x0: &[T], v0: &[T]) -> T {
    let d = T::of(x.len() as f64);
    let two = T::of(2.0);
    let z2 = (0..x.len()).fold(T::zero(), |s, i| s + (x[i] - x0[i] - k.vartheta * v0[i]).powi(2));
    (-d / two * (T::TAU() * k.r).ln() - z2 / (two * k.r)).exp()
}

/// Maximum over samples of `sqrt(t) |grad_v G(t, z)| / G(t, z / 2)` (source at the origin).
#[derive(Debug, Clone)]
pub struct GradientBoundReport<T> {
    pub b: T,
    pub per_time: Vec<(T, T)>,
}

/// Ratio `sqrt(t) |grad_v G(t, z)| / G(t, z/2)` evaluated in log form, source at the origin.
pub fn gradient_ratio<T: Real>(p: &ParameterSet<T>, k: &KernelCoefficients<T>, x: &[T], v: &[T]) -> T {
    let zero = vec![T::zero(); x.len()];
    let (y, u) = pulled_back(p, k.t, x, v, &zero, &zero);
    let (cy, cu) = grad_coeffs(p, k);
    let lin = (0..x.len()).fold(T::zero(), |s, i| s + (cy * y[i] + cu * u[i]).powi(2)).sqrt();
    let q = quad_form(k, &y, &u);
    k.t.sqrt() * lin / k.f * (-T::of(0.75) * q / k.f).exp()
}

pub fn gradient_bound_check<T: Real>(
    p: &ParameterSet<T>,
    times: &[T],
    samples: &[(T, T)],
) -> Result<GradientBoundReport<T>, KernelError> {
    let mut per_time = Vec::with_capacity(times.len());
    let mut b = T::zero();
    for &t in times {
        let k = coefficients(p, t)?;
        let m = samples.iter().fold(T::zero(), |m, &(x, v)| m.max(gradient_ratio(p, &k, &[x], &[v])));
        b = b.max(m);
        per_time.push((t, m));
    }
    Ok(GradientBoundReport { b, per_time })
}

/// Kernel spread below two grid cells in some direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionWarning {
    pub t: f64,
    pub x_spread: f64,
    pub v_spread: f64,
    pub hx: f64,
    pub hv: f64,
}

impl std::fmt::Display for ResolutionWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "kernel under-resolved at t={}: spreads ({:.3e}, {:.3e}) vs cells ({:.3e}, {:.3e})",
            self.t, self.x_spread, self.v_spread, self.hx, self.hv
        )
    }
}

#[derive(Debug, Clone)]
pub struct LinearOutcome<T: Real> {
    pub state: WignerState<T>,
    pub warning: Option<ResolutionWarning>,
}

/// Checks that the transition density spans at least two cells in x and v.
pub fn resolution_check<T: Real>(k: &KernelCoefficients<T>, hx: T, hv: T) -> Option<ResolutionWarning> {
    let two = T::of(2.0);
    let (xs, vs) = (k.sxx.sqrt(), k.svv.sqrt());
    if k.t > T::zero() && (xs < two * hx || vs < two * hv) {
        Some(ResolutionWarning { t: k.t.f64(), x_spread: xs.f64(), v_spread: vs.f64(), hx: hx.f64(), hv: hv.f64() })
    } else {
        None
    }
}

/// Fourier multiplier of the transition density, with real-preserving treatment of
/// Nyquist frequencies.
fn gaussian_multiplier<T: Real>(k: &KernelCoefficients<T>, kx: T, eta: T, nyq: bool) -> T {
    let half = T::of(0.5);
    let diag = -half * (k.sxx * kx * kx + k.svv * eta * eta);
    let cross = k.sxv * kx * eta;
    if nyq {
        // diag * cosh(cross), kept in the exponent so large frequencies underflow cleanly
        half * ((diag + cross).exp() + (diag - cross).exp())
    } else {
        (diag - cross).exp()
    }
}

/// `e^{tA} w` on the periodic grid.
///
/// Pushes `w` forward along the characteristic flow (exact x-shear, velocity dilation
/// taken on the v-spectrum), then convolves with the Gaussian transition density
/// through its Fourier multiplier.
pub fn propagate_linear<T: Real>(
    w: &WignerState<T>,
    p: &ParameterSet<T>,
    t: T,
) -> Result<LinearOutcome<T>, KernelError> {
    let k = coefficients(p, t)?;
    let g = &w.grid;
    let warning = resolution_check(&k, g.hx(), g.hv());
    if t == T::zero() {
        return Ok(LinearOutcome { state: w.clone(), warning: None });
    }
    let (nx, nv) = (g.nx(), g.nv());
    let flow = CharacteristicFlow::new(t, p.beta);
    let th = flow.vartheta();
    let mut c = spectral::complexify(&w.values);
    spectral::fft_x(&g.plans, &mut c, false);
    for ((i, j), z) in c.indexed_iter_mut() {
        *z = *z * spectral::shift_factor(i, nx, g.kx(i), -th * g.v(j));
    }
    let b = (p.beta * t).exp();
    if b == T::one() {
        spectral::fft_v(&g.plans, &mut c, false);
    } else {
        // v-spectrum of u(v) = w(b v) read off the continuous transform of the samples:
        // U(eta) = e^{-i eta lv (1 - 1/b)} / b * sum_n w_n e^{-i (eta / b)(v_n + lv)}.
        // Every eta / b lies inside the band, so nothing aliases and eta = 0 is exact.
        let lv = g.lv();
        let entry = |eta: T, n: usize| {
            let ph = -(eta * lv * (T::one() - b.recip()) + eta / b * (g.v(n) + lv));
            Complex::new(ph.cos(), ph.sin()) / b
        };
        let dil = Array2::from_shape_fn((nv, nv), |(m, n)| {
            let eta = g.eta(m);
            if spectral::is_nyquist(m, nv) {
                (entry(eta, n) + entry(-eta, n)) * T::of(0.5)
            } else {
                entry(eta, n)
            }
        });
        c.as_slice_mut().unwrap().par_chunks_mut(nv).for_each(|row| {
            let out: Vec<Complex<T>> = (0..nv).map(|m| (0..nv).fold(Complex::new(T::zero(), T::zero()), |s, n| s + dil[(m, n)] * row[n])).collect();
            row.copy_from_slice(&out);
        });
    }

    let jac = flow.jacobian(1);
    for ((i, j), z) in c.indexed_iter_mut() {
        let nyq = spectral::is_nyquist(i, nx) || spectral::is_nyquist(j, nv);
        *z = *z * (jac * gaussian_multiplier(&k, g.kx(i), g.eta(j), nyq));
    }
    spectral::fft2(&g.plans, &mut c, true);
    let mut state = w.with_values(spectral::real_part(&c));
    state.time = w.time + t;
    state.check_finite()?;
    Ok(LinearOutcome { state, warning })
}

/// Reference propagator: direct quadrature of `G * w` with x-periodic images `|m| <= images`.
/// Cost `O(N^4)`; meant for small grids.
pub fn propagate_by_quadrature(
    w: &WignerState<f64>,
    p: &ParameterSet<f64>,
    t: f64,
    images: i32,
) -> Result<WignerState<f64>, KernelError> {
    let k = coefficients(p, t)?;
    let g = &w.grid;
    let (nx, nv) = (g.nx(), g.nv());
    let period = 2.0 * g.lx();
    let cell = g.cell();
    let src: Vec<(f64, f64, f64)> = w
        .values
        .indexed_iter()
        .filter(|(_, &val)| val != 0.0)
        .map(|((i, j), &val)| (g.x(i), g.v(j), val))
        .collect();
    // green_g unrolled for d = 1
    let flow = CharacteristicFlow::new(t, p.beta);
    let (shift, eb) = (flow.backward_shift(), (p.beta * t).exp());
    let pre = flow.jacobian(1) / (std::f64::consts::TAU * k.f.sqrt());
    let out: Vec<f64> = (0..nx * nv)
        .into_par_iter()
        .map(|idx| {
            let (x, v) = (g.x(idx / nv), g.v(idx % nv));
            let mut s = 0.0;
            for &(x0, v0, val) in &src {
                let u = eb * v - v0;
                for m in -images..=images {
                    let y = x + period * m as f64 - shift * v - x0;
                    s += (-(k.nu * y * y + k.lambda * u * u + k.mu * y * u) / k.f).exp() * val;
                }
            }
            s * cell * pre
        })
        .collect();
    let mut state = w.with_values(Array2::from_shape_vec((nx, nv), out).unwrap());
    state.time = w.time + t;
    Ok(state)
}

/// Power-law fit of `|| d/dv e^{tA} w0 ||_2` over the given times.
pub fn smoothing_slope<T: Real>(
    w0: &WignerState<T>,
    p: &ParameterSet<T>,
    times: &[T],
) -> Result<(PowerFit, Vec<f64>), KernelError> {
    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        let wt = propagate_linear(w0, p, t)?.state;
        norms.push(wt.grad_v().norm_l2().f64());
    }
    let ts: Vec<f64> = times.iter().map(|t| t.f64()).collect();
    let fit = loglog_fit(&ts, &norms).ok_or(KernelError::NegativeTime(f64::NAN))?;
    Ok((fit, norms))
}

/// Largest observed gain `||d/dv e^{tA} w||_2 / ||w||_2` over Gaussian-windowed v-modes
/// `cos(eta v) exp(-v^2 / (2 width^2))`, `eta` in `etas`. Tracks the operator norm, which
/// decays like `t^{-1/2}`; a single fixed datum decays strictly faster.
pub fn smoothing_gain<T: Real>(
    grid: &PhaseGrid<T>,
    p: &ParameterSet<T>,
    t: T,
    etas: &[T],
    width: T,
) -> Result<T, KernelError> {
    let two = T::of(2.0);
    etas.iter().try_fold(T::zero(), |best, &eta| {
        let w = WignerState::from_fn(grid, |_, v| (eta * v).cos() * (-v * v / (two * width * width)).exp());
        let wt = propagate_linear(&w, p, t)?.state;
        Ok(best.max(wt.grad_v().norm_l2() / w.norm_l2()))
    })
}

/// Power-law fit of [`smoothing_gain`] over `times`.
pub fn smoothing_gain_slope<T: Real>(
    grid: &PhaseGrid<T>,
    p: &ParameterSet<T>,
    times: &[T],
    etas: &[T],
    width: T,
) -> Result<(PowerFit, Vec<f64>), KernelError> {
    let gains = times.iter().map(|&t| smoothing_gain(grid, p, t, etas, width).map(|g| g.f64())).collect::<Result<Vec<_>, _>>()?;
    let ts: Vec<f64> = times.iter().map(|t| t.f64()).collect();
    let fit = loglog_fit(&ts, &gains).ok_or(KernelError::NegativeTime(f64::NAN))?;
    Ok((fit, gains))
}
