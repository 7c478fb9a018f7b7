//! Exterior calculus for G2-structures, invariant-form algebra of contact
//! Calabi–Yau 7-manifolds, spectral checks on a torus model, and the ODE
//! engine for the modified Laplacian coflow Ansatz.

pub mod algebra;
pub mod coflow;
pub mod exterior;
pub mod g2;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod torus;
pub mod verify;

pub use exterior::{ExteriorError, KForm, Metric, MultiIndex, Vector};
pub use scalar::{Coefficient, Poly, Rational, Symbol};
