//! JSON form of fields and slices: a field is a list of Fourier modes
//! `(k, c)` with `f = Re Σ c e^{ik·x}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::calculus::TorusForm;
use super::constraints::DeformationSlice;
use super::field::{Field, Mode, Torus};
use super::TorusError;
use crate::exterior::{KForm, MultiIndex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCoefficient {
    pub k: Mode,
    /// `[re, im]`.
    pub c: [f64; 2],
}

pub type FieldSpec = Vec<ModeCoefficient>;

/// One component `coeff · dx^{axes}`; axes are 7D (1..=6 on the base).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub axes: Vec<usize>,
    pub modes: FieldSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub degree: usize,
    pub components: Vec<ComponentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub grid_n: usize,
    pub f: FieldSpec,
    pub f_dot: FieldSpec,
    pub beta: FormSpec,
    pub gamma_re: FormSpec,
    pub gamma_im: FormSpec,
    pub alpha: FormSpec,
}

pub fn field_to_spec(torus: &Torus, f: &Field) -> FieldSpec {
    torus.modes(f).into_iter().map(|(k, c)| ModeCoefficient { k, c: [c.re, c.im] }).collect()
}

pub fn field_from_spec(torus: &Torus, spec: &FieldSpec) -> Result<Field, TorusError> {
    let modes: Vec<(Mode, Complex64)> = spec.iter().map(|m| (m.k, Complex64::new(m.c[0], m.c[1]))).collect();
    torus.from_modes(&modes)
}

pub fn form_to_spec(torus: &Torus, a: &TorusForm) -> FormSpec {
    FormSpec {
        degree: a.degree(),
        components: a
            .terms()
            .map(|(i, c)| ComponentSpec { axes: i.axes().collect(), modes: field_to_spec(torus, c) })
            .collect(),
    }
}

pub fn form_from_spec(torus: &Torus, spec: &FormSpec) -> Result<TorusForm, TorusError> {
    let mut out = KForm::zero(7, spec.degree);
    for comp in &spec.components {
        if comp.axes.len() != spec.degree {
            return Err(TorusError::Shape(format!("component {:?} does not have degree {}", comp.axes, spec.degree)));
        }
        MultiIndex::new(7, &comp.axes)?;
        out = out + KForm::monomial(7, &comp.axes, field_from_spec(torus, &comp.modes)?)?;
    }
    Ok(out)
}

impl SliceSpec {
    /// Torus with exactly the axes used by the spec's modes.
    pub fn torus(&self) -> Result<Torus, TorusError> {
        let mut modes: Vec<Mode> = self.f.iter().chain(&self.f_dot).map(|m| m.k).collect();
        for form in [&self.beta, &self.gamma_re, &self.gamma_im, &self.alpha] {
            modes.extend(form.components.iter().flat_map(|c| c.modes.iter().map(|m| m.k)));
        }
        Torus::for_modes(self.grid_n, &modes)
    }

    pub fn to_slice(&self, torus: &Torus) -> Result<DeformationSlice, TorusError> {
        Ok(DeformationSlice {
            f: field_from_spec(torus, &self.f)?,
            f_dot: field_from_spec(torus, &self.f_dot)?,
            beta: form_from_spec(torus, &self.beta)?,
            gamma_re: form_from_spec(torus, &self.gamma_re)?,
            gamma_im: form_from_spec(torus, &self.gamma_im)?,
            alpha: form_from_spec(torus, &self.alpha)?,
        })
    }

    pub fn from_slice(torus: &Torus, slice: &DeformationSlice) -> Self {
        SliceSpec {
            grid_n: torus.n(),
            f: field_to_spec(torus, &slice.f),
            f_dot: field_to_spec(torus, &slice.f_dot),
            beta: form_to_spec(torus, &slice.beta),
            gamma_re: form_to_spec(torus, &slice.gamma_re),
            gamma_im: form_to_spec(torus, &slice.gamma_im),
            alpha: form_to_spec(torus, &slice.alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{constraint_residual, construct_slice, ConstraintModel};

    #[test]
    fn constructed_slice_survives_json() {
        let t = Torus::new(16, &[0, 2]).unwrap();
        let f = t.sample(|x| 0.05 * (x[0] + x[2]).cos());
        let f_dot = Field::Const(0.0);
        let slice = construct_slice(ConstraintModel::ProductMlcf, &t, &f, &f_dot, 1.0).unwrap();
        let json = serde_json::to_string(&SliceSpec::from_slice(&t, &slice)).unwrap();
        let spec: SliceSpec = serde_json::from_str(&json).unwrap();
        let t2 = spec.torus().unwrap();
        let back = spec.to_slice(&t2).unwrap();
        let report = constraint_residual(ConstraintModel::ProductMlcf, &back, &t2, 1.0).unwrap();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn rejects_bad_components() {
        let t = Torus::new(8, &[0]).unwrap();
        let spec = FormSpec { degree: 2, components: vec![ComponentSpec { axes: vec![1], modes: vec![] }] };
        assert!(form_from_spec(&t, &spec).is_err());
        let spec = FormSpec { degree: 2, components: vec![ComponentSpec { axes: vec![1, 9], modes: vec![] }] };
        assert!(form_from_spec(&t, &spec).is_err());
    }
}
