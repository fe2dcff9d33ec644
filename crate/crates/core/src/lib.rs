//! Numerical laboratory for spinodal-decomposition and coarsening invasion
//! fronts in the one-dimensional Cahn-Hilliard equation
//!
//! ```text
//! u_t = -(u_xx + u - u^3)_xx.
//! ```

pub mod bloch;
pub mod cli;
pub mod diagnostics;
pub mod dispersion;
pub mod equilibria;
pub mod error;
pub mod galerkin_tw;
pub mod ode;
pub mod params;
pub mod poly;
pub mod simulator;

pub use error::{Error, Result};
pub use params::{params_from_mass, Frame, Parameters, Regime};
