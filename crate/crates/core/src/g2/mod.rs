//! G2-structures on `ℝ⁷`: metric recovery from a positive 3-form, type
//! decompositions of 2- and 3-forms, torsion forms and the full torsion
//! tensor.
//!
//! Axis 0 is the fiber direction; axes 1..=6 carry the transverse SU(3)
//! structure `(ω, Υ)` with `φ = θ∧ω + ReΥ` in the flat case.

mod decompose;
mod structure;
mod torsion;

pub use decompose::{decompose2, decompose3, omega3_7_basis, type_operator2};
pub use structure::{
    fiber_form, im_upsilon6, kahler_form6, lift, metric_from_phi, re_upsilon6, standard_phi,
    G2Structure, DEGENERACY_THRESHOLD,
};
pub use torsion::{
    extract_torsion, full_torsion, hodge_laplacian_psi, j_operator, tensor_norm_sq, Tensor2,
    TorsionForms,
};

use thiserror::Error;

use crate::exterior::ExteriorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum G2Error {
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("expected a form on ℝ⁷ of the right degree, got dimension {dim}, degree {degree}")]
    Shape { dim: usize, degree: usize },
    #[error("3-form is degenerate (not positive)")]
    Degenerate,
    #[error("{0} is not representable in this coefficient ring")]
    Unrepresentable(&'static str),
    #[error("structure is not coclosed: |dψ| = {0:e}")]
    NotCoclosed(f64),
    #[error("torsion reconstruction failed: residual {0:e}")]
    Reconstruction(f64),
}
