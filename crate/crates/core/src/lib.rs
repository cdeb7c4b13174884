//! Solvers for the PT-symmetric family `u_t - i u (i u_x)^ε + u_xxx = 0`.

pub mod airy;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod invariants;
mod ode;
mod quad;
pub mod waves;

pub use error::{Error, Result};
