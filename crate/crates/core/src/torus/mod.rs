//! Spectral verification layer: a flat 6-torus base with a fiber
//! coordinate θ, grid-function coefficients, transverse Kähler calculus,
//! G2-structures built from SU(3) data, and residual checks of the torsion,
//! Laplacian and constraint formulas.

mod calculus;
mod checks;
mod constraints;
mod field;
pub mod io;
mod su3;

pub use calculus::{
    assemble, at_point, constant_basic, fiber_coframe, max_residual, mean_residual, restrict_to_base, Calculus,
    TorusForm, TorusVector, BASE_PAIRS,
};
pub use checks::{
    check_kahler_identity, check_laplacian, check_torsion, gradient_duality_residual, torsion_fields, Residual,
    ResidualReport, SPECTRAL_TOLERANCE,
};
pub use constraints::{
    ccy_combined_residual, constraint_residual, construct_slice, invert_lefschetz, j_pullback, part_11, part_30_03,
    ConstraintModel, DeformationSlice, CONSTRAINT_TOLERANCE,
};
pub use field::{Field, Mode, Torus};
pub use su3::{hermitian_det, kahler_metric, trace_against, G2Model, Su3Data, TorusG2, COMPATIBILITY_TOLERANCE};

use thiserror::Error;

use crate::exterior::ExteriorError;
use crate::g2::G2Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("transverse form is not positive at grid point {point}")]
    NotPositive { point: usize },
    #[error("SU(3) data is not compatible: residual {0:e}")]
    Incompatible(f64),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("G2 failure at grid point {point}: {source}")]
    G2 { point: usize, source: G2Error },
    #[error("{0}")]
    Shape(String),
}
