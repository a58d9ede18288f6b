//! Numerical toolkit for radial aggregation-diffusion problems: height
//! representations of radially decreasing densities, linear interpolation in
//! height space, entropy/interaction energies with convexity certification,
//! steady-state solving, finite-volume evolution, and the tail-forging
//! pipeline that manufactures multiple steady states.

pub mod density;
pub mod energy;
pub mod error;
pub mod evolve;
pub mod families;
pub mod geometry;
pub mod grid;
pub mod height;
pub mod interp;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod potentials;
pub mod quad;
pub mod scalar;
pub mod steady;

pub use error::{Error, Result};

/// Concrete f64 aliases for the common case.
pub type Grid = grid::RadialGrid<f64>;
pub type Density = density::RadialDensity<f64>;
pub type Height = height::HeightFunction<f64>;
pub type Curve = interp::InterpolationCurve<f64>;
pub type Pot = potentials::Potential<f64>;
pub type Steady = steady::SteadyState<f64>;
