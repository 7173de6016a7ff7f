//! Pseudo-differential operators of the Wigner nonlinearity on the d = 1 grid.
//!
//! With the v-Fourier variable `eta`:
//! * `Theta[V] w`   has symbol `i (V(x + eta/2) - V(x - eta/2))`,
//! * `Theta_h[V] w` has symbol `i (V(x + h eta/2) - V(x - h eta/2)) / h`,
//! * `Omega[F] w`   has the real even symbol `F(x + eta/2) + F(x - eta/2)`,
//! * `Gamma[E] w`   has symbol `W(x, eta) = int_{-1/2}^{1/2} E(x - r eta) dr`, and
//!   `Theta[V] = d/dv Gamma[V']`.
//!
//! With these conventions
//! `v^2 Theta[V] w = -1/4 Theta[V''] w - Omega[V'](v w) + Theta[V](v^2 w)`.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::fit::{loglog_fit, PowerFit};
use crate::phase_state::{PhaseGrid, WignerState};
use crate::potential::{torus_field_of_density, TorusField};
use crate::quad;
use crate::scalar::Real;
use crate::spectral;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ThetaError {
    #[error("potential sampled on {field} points over half-length {lx}, grid has {grid} points")]
    GridMismatch { field: usize, grid: usize, lx: f64 },
    #[error("Gauss-Legendre rule did not converge with {0} nodes")]
    NotConverged(usize),
    #[error("imaginary residue {residue:e} exceeds {limit:e} (aliased grid)")]
    Consistency { residue: f64, limit: f64 },
}

/// Relative imaginary residue allowed after the inverse transform, floored at a few
/// thousand ulps so single precision is judged against its own round-off.
pub fn residue_tolerance<T: Real>() -> f64 {
    1e-8f64.max(1e3 * T::epsilon().f64())
}

/// Change in `W` under node doubling that ends the refinement.
pub const SYMBOL_W_TOL: f64 = 1e-10;
const MAX_NODES: usize = 1 << 14;

fn check<T: Real>(f: &TorusField<T>, g: &PhaseGrid<T>) -> Result<(), ThetaError> {
    if f.len() != g.nx() || f.lx() != g.lx() {
        return Err(ThetaError::GridMismatch { field: f.len(), grid: g.nx(), lx: f.lx().f64() });
    }
    Ok(())
}

/// Applies a real symbol `s(x_i, eta_j)` (FFT order in `eta`), times `i` when `odd`.
/// Returns the real part and the largest imaginary residue.
fn apply_symbol_raw<T: Real>(w: &WignerState<T>, sym: &Array2<T>, odd: bool) -> (WignerState<T>, T) {
    let g = &w.grid;
    let mut c = spectral::complexify(&w.values);
    spectral::fft_v(&g.plans, &mut c, false);
    ndarray::Zip::from(&mut c).and(sym).for_each(|z, &s| {
        *z = if odd { Complex::new(-z.im * s, z.re * s) } else { *z * s };
    });
    spectral::fft_v(&g.plans, &mut c, true);
    let residue = c.iter().fold(T::zero(), |m, z| m.max(z.im.abs()));
    (w.with_values(spectral::real_part(&c)), residue)
}

fn apply_symbol<T: Real>(w: &WignerState<T>, sym: &Array2<T>, odd: bool) -> Result<WignerState<T>, ThetaError> {
    let (out, residue) = apply_symbol_raw(w, sym, odd);
    let limit = residue_tolerance::<T>() * w.max_abs().f64();
    if residue.f64() > limit {
        return Err(ThetaError::Consistency { residue: residue.f64(), limit });
    }
    Ok(out)
}

/// Largest imaginary residue of `Theta[V] w` before the real projection.
pub fn theta_residue<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<T, ThetaError> {
    check(v, &w.grid)?;
    Ok(apply_symbol_raw(w, &theta_symbol(v, &w.grid, T::one())?, true).1)
}

/// Builds a symbol column by column from `col(eta_j)` for `0 <= j <= nv/2`, extended by
/// parity (`odd`: `s(-eta) = -s(eta)`, zero at `eta = 0` and at Nyquist).
fn build_symbol<T: Real>(g: &PhaseGrid<T>, odd: bool, col: impl Fn(T) -> Vec<T> + Sync) -> Array2<T> {
    let (nx, nv) = (g.nx(), g.nv());
    let cols: Vec<Vec<T>> = (0..=nv / 2).into_par_iter().map(|j| col(g.eta(j).abs())).collect();
    let mut sym = Array2::zeros((nx, nv));
    for (j, c) in cols.iter().enumerate() {
        let zero_col = odd && (j == 0 || j == nv / 2);
        for i in 0..nx {
            let val = if zero_col { T::zero() } else { c[i] };
            sym[(i, j)] = val;
            if j != 0 && j != nv / 2 {
                sym[(i, nv - j)] = if odd { -val } else { val };
            }
        }
    }
    sym
}

/// Symbol `(V(x + h eta/2) - V(x - h eta/2)) / h` on the grid.
pub fn theta_symbol<T: Real>(v: &TorusField<T>, g: &PhaseGrid<T>, hbar: T) -> Result<Array2<T>, ThetaError> {
    check(v, g)?;
    Ok(build_symbol(g, true, |eta| v.delta(hbar * eta).into_iter().map(|d| d / hbar).collect()))
}

/// `Theta[V] w` (unit `hbar`).
pub fn theta_apply<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<WignerState<T>, ThetaError> {
    theta_hbar(v, w, T::one())
}

/// `Theta_h[V] w`.
pub fn theta_hbar<T: Real>(v: &TorusField<T>, w: &WignerState<T>, hbar: T) -> Result<WignerState<T>, ThetaError> {
    apply_symbol(w, &theta_symbol(v, &w.grid, hbar)?, true)
}

/// `Omega[F] w` with symbol `F(x + eta/2) + F(x - eta/2)`.
pub fn omega_apply<T: Real>(f: &TorusField<T>, w: &WignerState<T>) -> Result<WignerState<T>, ThetaError> {
    check(f, &w.grid)?;
    let sym = build_symbol(&w.grid, false, |eta| f.delta_plus(eta));
    apply_symbol(w, &sym, false)
}

/// `W(x, eta) = int_{-1/2}^{1/2} E(x - r eta) dr` by Gauss-Legendre in `r`, doubling the node
/// count until the symbol moves by less than [`SYMBOL_W_TOL`] (relative to its maximum).
/// Returns the symbol and the node count used.
pub fn symbol_w<T: Real>(e: &TorusField<T>, g: &PhaseGrid<T>) -> Result<(Array2<T>, usize), ThetaError> {
    check(e, g)?;
    let build = |m: usize| {
        let rule: Vec<(T, T)> = quad::gauss_legendre(m).into_iter().map(|(x, w)| (T::of(0.5 * x), T::of(0.5 * w))).collect();
        build_symbol(g, false, |eta| e.averaged_shift(eta, &rule))
    };
    let mut m = 16;
    let mut prev = build(m);
    while m < MAX_NODES {
        m *= 2;
        let next = build(m);
        let scale = next.iter().fold(T::zero(), |a, &x| a.max(x.abs())).max(T::min_positive_value());
        let diff = ndarray::Zip::from(&next).and(&prev).fold(T::zero(), |a, &x, &y| a.max((x - y).abs()));
        if diff <= T::of(SYMBOL_W_TOL) * scale {
            return Ok((next, m));
        }
        prev = next;
    }
    Err(ThetaError::NotConverged(m))
}

/// `Gamma[E] w`.
pub fn gamma_apply<T: Real>(e: &TorusField<T>, w: &WignerState<T>) -> Result<WignerState<T>, ThetaError> {
    let (sym, _) = symbol_w(e, &w.grid)?;
    apply_symbol(w, &sym, false)
}

/// `d/dv Gamma[V'] w`, which equals `Theta[V] w`.
pub fn theta_via_gamma<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<WignerState<T>, ThetaError> {
    let g = &w.grid;
    let (mut sym, _) = symbol_w(&v.derivative(), g)?;
    for ((_, j), s) in sym.indexed_iter_mut() {
        *s = if spectral::is_nyquist(j, g.nv()) { T::zero() } else { *s * g.eta(j) };
    }
    apply_symbol(w, &sym, true)
}

fn rel<T: Real>(a: &WignerState<T>, b: &WignerState<T>) -> T {
    a.axpy(-T::one(), b).norm_l2() / a.norm_l2().max(b.norm_l2()).max(T::min_positive_value())
}

/// `|<Theta[V] w, w>| / (||Theta[V] w|| ||w||)`.
pub fn skew_residual<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<T, ThetaError> {
    let tw = theta_apply(v, w)?;
    Ok(tw.inner(w).abs() / (tw.norm_l2() * w.norm_l2()).max(T::min_positive_value()))
}

/// Relative difference between `Theta[V] w` and `d/dv Gamma[V'] w`.
pub fn divergence_form_residual<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<T, ThetaError> {
    Ok(rel(&theta_apply(v, w)?, &theta_via_gamma(v, w)?))
}

/// Relative residual of `v^2 Theta[V] w = -1/4 Theta[V''] w - Omega[V'](v w) + Theta[V](v^2 w)`.
pub fn weighted_decomposition_residual<T: Real>(v: &TorusField<T>, w: &WignerState<T>) -> Result<T, ThetaError> {
    let lhs = theta_apply(v, w)?.times_v_power(2);
    let v1 = v.derivative();
    let v2 = v1.derivative();
    let rhs = theta_apply(v, &w.times_v_power(2))?
        .axpy(-T::of(0.25), &theta_apply(&v2, w)?)
        .axpy(-T::one(), &omega_apply(&v1, &w.times_v_power(1))?);
    Ok(rel(&lhs, &rhs))
}

/// Residual of `int (Theta w)(x - s v, v) dv = s d/dx int (Gamma[V'] w)(x - s v, v) dv`.
pub fn shifted_divergence_residual<T: Real>(v: &TorusField<T>, w: &WignerState<T>, s: T) -> Result<T, ThetaError> {
    let g = &w.grid;
    let lhs = theta_apply(v, w)?.shear(s).density();
    let gw = gamma_apply(&v.derivative(), w)?.shear(s).density();
    let rhs = TorusField::from_samples(gw.as_slice().unwrap(), g.lx()).derivative().samples();
    let num = lhs.iter().zip(&rhs).fold(T::zero(), |a, (&l, &r)| a + (l - s * r).powi(2)).sqrt();
    let den = lhs.iter().fold(T::zero(), |a, &l| a + l * l).sqrt().max(T::min_positive_value());
    Ok(num / den)
}

/// `||Theta[V[z]] u||_X / ((||u||_X + ||d_v u||_X) ||z||_X)` with `V[z]` the torus potential of `z`.
pub fn theta_bound_ratio<T: Real>(z: &WignerState<T>, u: &WignerState<T>) -> Result<T, ThetaError> {
    let n = z.density();
    let (v, _) = torus_field_of_density(n.as_slice().unwrap(), z.grid.lx());
    let num = theta_apply(&v, u)?.norm_x();
    Ok(num / ((u.norm_x() + u.grad_v().norm_x()) * z.norm_x()))
}

/// `|| Theta_h[V] w - V' d_v w ||_2` for each `h`, with the power-law fit in `h`.
pub fn semiclassical_order<T: Real>(
    v: &TorusField<T>,
    w: &WignerState<T>,
    hbars: &[T],
) -> Result<(PowerFit, Vec<f64>), ThetaError> {
    check(v, &w.grid)?;
    let e = v.derivative().samples();
    let mut classical = w.grad_v();
    for (i, mut row) in classical.values.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|x| x * e[i]);
    }
    let mut res = Vec::with_capacity(hbars.len());
    for &h in hbars {
        res.push(theta_hbar(v, w, h)?.axpy(-T::one(), &classical).norm_l2().f64());
    }
    let hs: Vec<f64> = hbars.iter().map(|h| h.f64()).collect();
    let fit = loglog_fit(&hs, &res).ok_or(ThetaError::NotConverged(0))?;
    Ok((fit, res))
}
