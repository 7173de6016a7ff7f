//! Poisson solves and the difference quotients of the potential.
//!
//! The periodic (d = 1) solver uses `-V'' = n - mean(n)`. The radial free-space solver
//! (d = 3) uses the same sign convention, `-lap V = n`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::quad::{self, QuadError};
use crate::scalar::Real;
use crate::spectral;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PotentialError {
    #[error("density has nonzero mean {mean} on the torus")]
    Neutrality { mean: f64 },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Band-limited periodic function on `[-L, L)` stored by its DFT coefficients,
/// `f(x) = sum_m c_m exp(i k_m (x + L))`, `k_m = pi m / L`.
#[derive(Clone)]
pub struct TorusField<T: Real> {
    lx: T,
    coeffs: Vec<Complex<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for TorusField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusField").field("lx", &self.lx).field("n", &self.coeffs.len()).finish()
    }
}

impl<T: Real> TorusField<T> {
    pub fn from_samples(values: &[T], lx: T) -> Self {
        let n = values.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let mut c: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        fwd.process(&mut c);
        let s = T::one() / T::of(n as f64);
        c.iter_mut().for_each(|z| *z = *z * s);
        Self { lx, coeffs: c, inverse: planner.plan_fft_inverse(n) }
    }

    /// Samples of `f` on a grid of `n` points (`x_i = -L + 2 L i / n`).
    pub fn from_fn(n: usize, lx: T, f: impl Fn(T) -> T) -> Self {
        let h = T::of(2.0) * lx / T::of(n as f64);
        let v: Vec<T> = (0..n).map(|i| f(-lx + T::of(i as f64) * h)).collect();
        Self::from_samples(&v, lx)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lx(&self) -> T {
        self.lx
    }

    pub fn wavenumber(&self, m: usize) -> T {
        spectral::wavenumber(m, self.len(), self.lx)
    }

    fn map_coeffs(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
        Self {
            lx: self.lx,
            coeffs: self.coeffs.iter().enumerate().map(|(m, &c)| f(m, c)).collect(),
            inverse: self.inverse.clone(),
        }
    }

    fn synth(&self, mult: impl Fn(usize) -> Complex<T>) -> Vec<T> {
        let mut buf: Vec<Complex<T>> = self.coeffs.iter().enumerate().map(|(m, &c)| c * mult(m)).collect();
        self.inverse.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    pub fn samples(&self) -> Vec<T> {
        self.synth(|_| Complex::new(T::one(), T::zero()))
    }

    /// Spectral derivative.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        self.map_coeffs(|m, c| c * spectral::deriv_factor(m, n, self.wavenumber(m)))
    }

    /// Point evaluation of the trigonometric interpolant.
    pub fn eval(&self, x: T) -> T {
        let n = self.len();
        let mut s = T::zero();
        for (m, &c) in self.coeffs.iter().enumerate() {
            let ph = self.wavenumber(m) * (x + self.lx);
            s = s + if spectral::is_nyquist(m, n) {
                c.re * ph.cos()
            } else {
                (c * Complex::new(ph.cos(), ph.sin())).re
            };
        }
        s
    }

    /// Samples of `f(x + s)`.
    pub fn shifted(&self, s: T) -> Vec<T> {
        let n = self.len();
        self.synth(|m| spectral::shift_factor(m, n, self.wavenumber(m), s))
    }

    /// Samples of `f(x + eta/2) - f(x - eta/2)`.
    pub fn delta(&self, eta: T) -> Vec<T> {
        let n = self.len();
        let half = T::of(0.5);
        self.synth(|m| {
            if spectral::is_nyquist(m, n) {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::zero(), T::of(2.0) * (self.wavenumber(m) * eta * half).sin())
            }
        })
    }

    /// Samples of `f(x + eta/2) + f(x - eta/2)`.
    pub fn delta_plus(&self, eta: T) -> Vec<T> {
        let half = T::of(0.5);
        self.synth(|m| Complex::new(T::of(2.0) * (self.wavenumber(m) * eta * half).cos(), T::zero()))
    }

    /// Samples of `sum_r w_r f(x - r eta)` for a symmetric rule `(r, w_r)`.
    pub(crate) fn averaged_shift(&self, eta: T, rule: &[(T, T)]) -> Vec<T> {
        self.synth(|m| {
            let k = self.wavenumber(m);
            let s = rule.iter().fold(T::zero(), |acc, &(r, w)| acc + w * (k * r * eta).cos());
            Complex::new(s, T::zero())
        })
    }

    /// Mean over the period.
    pub fn mean(&self) -> T {
        self.coeffs[0].re
    }

    pub fn scale(&self, a: T) -> Self {
        self.map_coeffs(|_, c| c * a)
    }
}

/// Subtracts the mean (uniform neutralising background).
pub fn neutralize<T: Real>(n: &[T]) -> Vec<T> {
    let mean = n.iter().copied().sum::<T>() / T::of(n.len() as f64);
    n.iter().map(|&x| x - mean).collect()
}

/// Solves `-V'' = n` on the torus `[-L, L)`. The mean of `n` must vanish to round-off.
pub fn solve_poisson_torus<T: Real>(n: &[T], lx: T) -> Result<TorusField<T>, PotentialError> {
    let field = TorusField::from_samples(n, lx);
    let scale = n.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let mean = field.mean();
    if mean.abs() > T::of(64.0) * T::epsilon() * scale.max(T::min_positive_value()) {
        return Err(PotentialError::Neutrality { mean: mean.f64() });
    }
    Ok(field.map_coeffs(|m, c| {
        let k = field.wavenumber(m);
        if m == 0 {
            Complex::new(T::zero(), T::zero())
        } else {
            c / (k * k)
        }
    }))
}

/// Field `E = V'` of the torus potential of `n - mean(n)`.
pub fn torus_field_of_density<T: Real>(n: &[T], lx: T) -> (TorusField<T>, TorusField<T>) {
    let v = solve_poisson_torus(&neutralize(n), lx).expect("neutralised density");
    let e = v.derivative();
    (v, e)
}

/// Radial free-space solution of `-lap V = n` for a radial density in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolution {
    pub r: f64,
    /// `M(r) = int_0^r n(s) 4 pi s^2 ds`
    pub enclosed: f64,
    /// Radial component `dV/dr = -M(r) / (4 pi r^2)`.
    pub field: f64,
    /// `V(r) = M(r) / (4 pi r) + int_r^inf n(s) s ds`
    pub potential: f64,
}

pub fn solve_poisson_radial(n: impl Fn(f64) -> f64, r: f64, rel_tol: f64) -> Result<RadialSolution, PotentialError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(PotentialError::Domain(format!("radius must be positive, got {r}")));
    }
    let enclosed = quad::integrate(|s| n(s) * 4.0 * PI * s * s, 0.0, r, rel_tol)?;
    let outer = quad::integrate(|s| n(s) * s, r, f64::INFINITY, rel_tol)?;
    Ok(RadialSolution {
        r,
        enclosed,
        field: -enclosed / (4.0 * PI * r * r),
        potential: enclosed / (4.0 * PI * r) + outer,
    })
}

/// `K_p = int_{R^3} (|x - e/2| |x + e/2|)^{-p} dx` for a unit vector `e`, finite for `3/2 < p < 3`.
///
/// Prolate spheroidal coordinates with foci `+-e/2` reduce it to
/// `2 pi c^{3-2p} int_1^inf int_{-1}^1 (xi^2 - zeta^2)^{1-p} dzeta dxi`, `c = 1/2`.
pub fn dipole_constant(p: f64, rel_tol: f64) -> Result<f64, PotentialError> {
    if !(p > 1.5 && p < 3.0) {
        return Err(PotentialError::Domain(format!("dipole kernel norm needs 3/2 < p < 3, got {p}")));
    }
    let c: f64 = 0.5;
    let inner = |xi: f64| -> f64 {
        quad::integrate(|z| 2.0 * (xi * xi - z * z).powf(1.0 - p), 0.0, 1.0, rel_tol * 0.1).unwrap_or(f64::NAN)
    };
    // Beyond xi = 2 the inner integral is 2 xi^{2-2p} (1 + O(xi^-2)); the leading power is
    // integrated exactly so the slowly decaying tail near p = 3/2 never reaches the quadrature.
    let correction = |xi: f64| -> f64 {
        let h = quad::integrate_tol(
            |z| ((1.0 - p) * (-(z * z) / (xi * xi)).ln_1p()).exp_m1(),
            0.0,
            1.0,
            1e-300,
            rel_tol * 0.1,
        )
        .unwrap_or(f64::NAN);
        2.0 * xi.powf(2.0 - 2.0 * p) * h
    };
    let near = quad::integrate(inner, 1.0, 2.0, rel_tol)?;
    let lead = 2f64.powf(4.0 - 2.0 * p) / (2.0 * p - 3.0);
    let tail = quad::integrate(correction, 2.0, f64::INFINITY, rel_tol)?;
    Ok(2.0 * PI * c.powf(3.0 - 2.0 * p) * (near + lead + tail))
}

/// Upper bound `|eta|^{3/p - 1} K_p^{1/p}` of `|| 1/|. - eta/2| - 1/|. + eta/2| ||_p`.
pub fn dipole_kernel_norm(eta: f64, p: f64) -> Result<f64, PotentialError> {
    let k = dipole_constant(p, 1e-9)?;
    Ok(eta.abs().powf(3.0 / p - 1.0) * k.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_density_gives_cosine_potential() {
        let lx = PI;
        let n = 64;
        let dens: Vec<f64> = (0..n).map(|i| (-lx + 2.0 * lx * i as f64 / n as f64).cos()).collect();
        let v = solve_poisson_torus(&dens, lx).unwrap();
        for (a, b) in v.samples().iter().zip(&dens) {
            assert!((a - b).abs() < 1e-13);
        }
        // -V'' = n
        let vpp = v.derivative().derivative().samples();
        for (a, b) in vpp.iter().zip(&dens) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_neutral_density_is_rejected() {
        assert!(matches!(solve_poisson_torus(&[1.0; 16], 1.0), Err(PotentialError::Neutrality { .. })));
        assert!(solve_poisson_torus(&neutralize(&[1.0, 2.0, 0.0, 5.0]), 1.0).is_ok());
    }

    #[test]
    fn delta_and_shift_of_trig_polynomial() {
        let f = TorusField::from_fn(32, PI, |x| (2.0 * x).sin() + 0.5 * x.cos());
        let eta = 0.7;
        let d = f.delta(eta);
        let dp = f.delta_plus(eta);
        let sh = f.shifted(0.3);
        let g = |x: f64| (2.0 * x).sin() + 0.5 * x.cos();
        for i in 0..32 {
            let x = -PI + 2.0 * PI * i as f64 / 32.0;
            assert!((d[i] - (g(x + eta / 2.0) - g(x - eta / 2.0))).abs() < 1e-13);
            assert!((dp[i] - (g(x + eta / 2.0) + g(x - eta / 2.0))).abs() < 1e-13);
            assert!((sh[i] - g(x + 0.3)).abs() < 1e-13);
        }
        assert!((f.eval(0.123) - g(0.123)).abs() < 1e-13);
    }

    #[test]
    fn radial_gaussian_charge() {
        // unit-mass Gaussian of variance 1: M(r) = erf(r/sqrt2) - sqrt(2/pi) r e^{-r^2/2}
        let n = |r: f64| (2.0 * PI).powf(-1.5) * (-r * r / 2.0).exp();
        for r in [0.5, 1.0, 3.0, 12.0] {
            let s = solve_poisson_radial(n, r, 1e-10).unwrap();
            let m = libm::erf(r / 2f64.sqrt()) - (2.0 / PI).sqrt() * r * (-r * r / 2.0).exp();
            assert!((s.enclosed - m).abs() < 1e-9);
            // V(r) = erf(r / sqrt 2) / (4 pi r)
            let v = libm::erf(r / 2f64.sqrt()) / (4.0 * PI * r);
            assert!((s.potential - v).abs() < 1e-9 * v.max(1e-3));
        }
        let far = solve_poisson_radial(n, 40.0, 1e-10).unwrap();
        assert!((far.field.abs() * 4.0 * PI * 1600.0 - 1.0).abs() < 1e-8);
        assert!(solve_poisson_radial(n, 0.0, 1e-8).is_err());
    }

    #[test]
    fn dipole_constant_at_p2_is_pi_cubed() {
        let k = dipole_constant(2.0, 1e-10).unwrap();
        assert!((k - PI.powi(3)).abs() < 1e-6 * PI.powi(3), "{k}");
        let coarse = dipole_constant(2.0, 1e-6).unwrap();
        assert!((coarse - k).abs() < 1e-4 * k);
    }

    #[test]
    fn dipole_norm_scaling_and_domain() {
        for p in [1.8, 2.0, 2.5] {
            let a = dipole_kernel_norm(0.5, p).unwrap();
            let b = dipole_kernel_norm(2.0, p).unwrap();
            assert!(((b / a).ln() / 4f64.ln() - (3.0 / p - 1.0)).abs() < 1e-9);
        }
        assert!(dipole_kernel_norm(1.0, 1.5).is_err());
        assert!(dipole_kernel_norm(1.0, 3.0).is_err());
    }

    #[test]
    fn dipole_constant_diverges_like_tail_as_p_approaches_three_halves() {
        // tail of the integral behaves like 4 pi / (2p - 3)
        let mut prev = 0.0;
        for eps in [0.1, 0.01, 0.001] {
            let p = 1.5 + eps;
            let k = dipole_constant(p, 1e-9).unwrap();
            assert!(k > prev);
            prev = k;
            if eps <= 0.01 {
                assert!((k * 2.0 * eps / (4.0 * PI) - 1.0).abs() < 0.1, "p={p} k={k}");
            }
        }
    }
}
