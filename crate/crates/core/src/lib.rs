//! Phase-space solver for the Wigner-Poisson-Fokker-Planck system.
//!
//! Grid numerics are generic over [`Real`]; the aliases below fix the scalar.
pub mod dispersive;
pub mod evolve;
pub mod fit;
pub mod kernel;
pub mod params;
pub mod phase_state;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod scalar;
mod spectral;
pub mod theta_ops;

pub use scalar::Real;

pub type Params = params::ParameterSet<f64>;
pub type Grid = phase_state::PhaseGrid<f64>;
pub type State = phase_state::WignerState<f64>;
pub type Field = potential::TorusField<f64>;
pub type Coefficients = kernel::KernelCoefficients<f64>;
pub type EvolveConfig = evolve::EvolveConfig<f64>;

pub type ParamsF32 = params::ParameterSet<f32>;
pub type GridF32 = phase_state::PhaseGrid<f32>;
pub type StateF32 = phase_state::WignerState<f32>;
pub type FieldF32 = potential::TorusField<f32>;
