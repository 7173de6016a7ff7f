//! Physical parameters of the Fokker-Planck generator and their admissibility.

use thiserror::Error;

use crate::scalar::Real;

/// Space dimension of the phase-space problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Option<Dim> {
        match d {
            1 => Some(Dim::One),
            3 => Some(Dim::Three),
            _ => None,
        }
    }
}

/// Which half of the admissibility condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindbladClause {
    /// `alpha * sigma >= gamma^2 + beta^2 / 16`
    Lindblad,
    /// `alpha * sigma > gamma^2`
    Ellipticity,
}

impl std::fmt::Display for LindbladClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LindbladClause::Lindblad => write!(f, "Lindblad clause alpha*sigma >= gamma^2 + beta^2/16"),
            LindbladClause::Ellipticity => write!(f, "ellipticity clause alpha*sigma > gamma^2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter {name} is invalid: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("parameters rejected by the {0}")]
    Rejected(LindbladClause),
}

/// Coefficients of the generator
/// `A u = -v.grad_x u + beta div_v(v u) + sigma lap_v u + 2 gamma div_v grad_x u + alpha lap_x u`
/// together with the scaled Planck constant and the dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub sigma: T,
    pub hbar: T,
    pub dim: Dim,
}

impl<T: Real> ParameterSet<T> {
    /// Builds and validates a parameter set.
    pub fn new(alpha: T, beta: T, gamma: T, sigma: T, hbar: T, dim: Dim) -> Result<Self, ParamError> {
        let p = Self { alpha, beta, gamma, sigma, hbar, dim };
        p.validate()?;
        Ok(p)
    }

    /// Unit-`hbar` parameters in the given dimension.
    pub fn fp(alpha: f64, beta: f64, gamma: f64, sigma: f64, dim: Dim) -> Result<Self, ParamError> {
        Self::new(T::of(alpha), T::of(beta), T::of(gamma), T::of(sigma), T::one(), dim)
    }

    /// Range checks followed by the admissibility condition.
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks = [
            ("alpha", self.alpha, true),
            ("beta", self.beta, true),
            ("gamma", self.gamma, false),
            ("sigma", self.sigma, true),
            ("hbar", self.hbar, true),
        ];
        for (name, value, nonneg) in checks {
            if !value.is_finite() {
                return Err(ParamError::InvalidParameter { name, reason: "must be finite".into() });
            }
            if nonneg && value < T::zero() {
                return Err(ParamError::InvalidParameter { name, reason: "must be non-negative".into() });
            }
        }
        if self.sigma <= T::zero() {
            return Err(ParamError::InvalidParameter { name: "sigma", reason: "must be positive".into() });
        }
        if self.hbar <= T::zero() {
            return Err(ParamError::InvalidParameter { name: "hbar", reason: "must be positive".into() });
        }
        self.lindblad_check()
    }

    /// `alpha sigma >= gamma^2 + beta^2/16` and `alpha sigma > gamma^2`.
    pub fn lindblad_check(&self) -> Result<(), ParamError> {
        let det = self.alpha * self.sigma;
        let g2 = self.gamma * self.gamma;
        if det < g2 + self.beta * self.beta / T::of(16.0) {
            return Err(ParamError::Rejected(LindbladClause::Lindblad));
        }
        if det <= g2 {
            return Err(ParamError::Rejected(LindbladClause::Ellipticity));
        }
        Ok(())
    }

    /// Exponential rate of the semigroup in the `v^2`-weighted norm:
    /// `3 beta / 2 + 9 sigma` for d = 3 and `beta / 2 + 3 sigma` for d = 1.
    pub fn kappa(&self) -> T {
        match self.dim {
            Dim::Three => T::of(1.5) * self.beta + T::of(9.0) * self.sigma,
            Dim::One => T::of(0.5) * self.beta + T::of(3.0) * self.sigma,
        }
    }

    /// Growth rate `d beta` of the squared L2 norm under the friction term.
    pub fn mass_growth_rate(&self) -> T {
        T::of(self.dim.get() as f64) * self.beta
    }

    pub fn with_dim(mut self, dim: Dim) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_hbar(mut self, hbar: T) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn cast<U: Real>(&self) -> ParameterSet<U> {
        ParameterSet {
            alpha: U::of(self.alpha.f64()),
            beta: U::of(self.beta.f64()),
            gamma: U::of(self.gamma.f64()),
            sigma: U::of(self.sigma.f64()),
            hbar: U::of(self.hbar.f64()),
            dim: self.dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64, g: f64, s: f64) -> Result<ParameterSet<f64>, ParamError> {
        ParameterSet::fp(a, b, g, s, Dim::Three)
    }

    #[test]
    fn admissible_sets() {
        assert!(p(1.0, 1.0, 0.0, 1.0).is_ok());
        assert!(p(1.0, 1.0, 0.3, 1.0).is_ok());
        // Lindblad clause with equality is allowed.
        assert!(p(1.0, 2.0, 0.0, 0.25).is_ok());
    }

    #[test]
    fn rejection_names_the_clause() {
        assert_eq!(p(1.0, 5.0, 0.0, 1.0).unwrap_err(), ParamError::Rejected(LindbladClause::Lindblad));
        assert_eq!(p(1.0, 0.0, 1.0, 1.0).unwrap_err(), ParamError::Rejected(LindbladClause::Ellipticity));
    }

    #[test]
    fn range_errors() {
        assert!(matches!(p(1.0, 0.0, 0.0, 0.0), Err(ParamError::InvalidParameter { name: "sigma", .. })));
        assert!(matches!(p(-1.0, 0.0, 0.0, 1.0), Err(ParamError::InvalidParameter { name: "alpha", .. })));
        assert!(matches!(p(f64::NAN, 0.0, 0.0, 1.0), Err(ParamError::InvalidParameter { .. })));
        assert!(matches!(
            ParameterSet::new(1.0, 0.0, 0.0, 1.0, 0.0, Dim::One),
            Err(ParamError::InvalidParameter { name: "hbar", .. })
        ));
    }

    #[test]
    fn kappa_values() {
        assert_eq!(p(1.0, 2.0, 0.0, 1.0).unwrap().kappa(), 12.0);
        assert_eq!(p(1.0, 2.0, 0.0, 1.0).unwrap().with_dim(Dim::One).kappa(), 4.0);
        assert_eq!(p(1.0, 1.0, 0.0, 1.0).unwrap().mass_growth_rate(), 3.0);
    }
}
