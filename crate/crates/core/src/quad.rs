//! Quadrature helpers: adaptive Gauss-Kronrod and Gauss-Legendre rules.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use gkquad::single::{integral_with_config, IntegrationConfig};
use gkquad::Tolerance;
use thiserror::Error;

/// Default relative tolerance for the adaptive rule.
pub const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("quadrature failed on [{a}, {b}]: {reason}")]
pub struct QuadError {
    pub a: f64,
    pub b: f64,
    pub reason: String,
}

/// Adaptive Gauss-Kronrod with extrapolation; `b` may be infinite.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64, QuadError> {
    integrate_tol(f, a, b, 1e-300, rel_tol)
}

/// As [`integrate`] with an explicit absolute tolerance floor.
pub fn integrate_tol(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let mut cfg = IntegrationConfig::default();
    cfg.tolerance = Tolerance::AbsOrRel(abs_tol, rel_tol);
    cfg.max_iters = 2000;
    let r = integral_with_config(|x: f64| f(x), a..b, cfg);
    match r.estimate_delta() {
        Ok((v, _)) if v.is_finite() => Ok(v),
        Ok((v, _)) => Err(QuadError { a, b, reason: format!("non-finite estimate {v}") }),
        Err(e) => Err(QuadError { a, b, reason: format!("{e:?}") }),
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    rule.as_node_weight_pairs().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_and_infinite_integrals() {
        let a = integrate(|s| s.powf(-0.5) * (1.0 - s).powf(-0.5), 0.0, 1.0, 1e-10).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-8);
        let b = integrate(|s| (-s * s).exp(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert!((b - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let r = gauss_legendre(5);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let sym: f64 = r.iter().map(|(x, _)| *x).sum();
        assert!(sym.abs() < 1e-14);
    }
}
