//! Numerical calculus on smooth metric measure spaces `(Σⁿ, g, e^{−f} dVol)`.
//!
//! Models are given in a single chart; every field is evaluated as a truncated
//! Taylor jet, so curvature and the weighted operators come out with exact
//! derivatives unless a finite-difference path is requested explicitly.

pub mod error;
pub mod expr;
pub mod field;
pub mod jet;
pub mod manifold;
pub mod models;

pub use error::{Error, Result};
pub mod linearization;
pub mod quadrature;
pub mod report;
pub mod weighted;
pub mod identities;
pub mod boundary;
pub mod random;
pub mod spectral;
