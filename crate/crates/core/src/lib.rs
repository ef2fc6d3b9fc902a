//! Pseudospectral variational lab for the mean field equation
//! `-Delta u = rho1 (h1 e^u / int h1 e^u - 1) - rho2 (h2 e^-u / int h2 e^-u - 1)`
//! on the unit flat torus.

// `!(x > 0.0)` style guards are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod families;
pub mod field;
pub mod functional;
pub mod geometry;
pub mod green;
pub mod grid;
pub mod quad;
pub mod registry;
pub mod solver;
pub mod spectral;
pub mod trig;

pub use error::{Error, ErrorClass, Result};
pub use field::Field;
pub use functional::{Params, Regime, Weights};
pub use geometry::LocalGeometry;
pub use grid::{Grid, Point};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
