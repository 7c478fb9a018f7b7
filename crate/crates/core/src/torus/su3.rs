use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calculus::{
    assemble, at_point, constant_basic, fiber_coframe, max_residual, restrict_to_base, Calculus, TorusForm,
    TorusVector,
};
use super::field::{Field, Torus};
use super::TorusError;
use crate::algebra::FiberConvention;
use crate::exterior::{KForm, Metric, MultiIndex};
use crate::g2::{im_upsilon6, kahler_form6, re_upsilon6, G2Structure};
use crate::linalg;
use crate::scalar::Coefficient;

/// Tolerance for closedness and compatibility of spectral SU(3) data.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-10;

/// Transverse SU(3) data on the torus: `ω = ω₀ + dd^c f` with the standard
/// complex structure and `Υ = dz¹∧dz²∧dz³`.
#[derive(Clone, Debug)]
pub struct Su3Data {
    calc: Calculus,
    potential: Field,
    omega: TorusForm,
}

impl Su3Data {
    pub fn flat(torus: Torus) -> Self {
        Self::from_potential(torus, Field::Const(0.0)).expect("flat data")
    }

    /// `ω = ω₀ + dd^c f`, validated.
    pub fn from_potential(torus: Torus, potential: Field) -> Result<Self, TorusError> {
        let calc = Calculus::new(torus, FiberConvention::Product);
        let omega = constant_basic(&kahler_form6()) + calc.ddc(&potential);
        let data = Su3Data { calc, potential, omega };
        data.validate()?;
        Ok(data)
    }

    pub fn torus(&self) -> &Torus {
        self.calc.torus()
    }

    pub fn calculus(&self) -> &Calculus {
        &self.calc
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn omega(&self) -> &TorusForm {
        &self.omega
    }

    pub fn re_upsilon(&self) -> TorusForm {
        constant_basic(&re_upsilon6())
    }

    pub fn im_upsilon(&self) -> TorusForm {
        constant_basic(&im_upsilon6())
    }

    /// Replace `f` by `f + h`; the basic class of `ω` is unchanged.
    pub fn type_ii_deform(&self, h: &Field) -> Result<Self, TorusError> {
        Self::from_potential(self.torus().clone(), self.potential.clone() + h.clone())
    }

    /// Positivity per point, `dω = 0` and `ω∧Υ = 0`.
    pub fn validate(&self) -> Result<(), TorusError> {
        let metrics = self.metrics_unchecked();
        if let Some(p) = (0..metrics.len()).find(|p| {
            linalg::leading_minors_positive(&metrics[*p]) != Some(true)
        }) {
            return Err(TorusError::NotPositive { point: p });
        }
        let closed = max_residual(&self.calc.d(&self.omega));
        let compat = max_residual(&(&self.omega ^ &self.re_upsilon()))
            .max(max_residual(&(&self.omega ^ &self.im_upsilon())));
        let worst = closed.max(compat);
        if worst > COMPATIBILITY_TOLERANCE {
            return Err(TorusError::Incompatible(worst));
        }
        Ok(())
    }

    /// `g(U, V) = ω(U, JV)` at every point, as 6×6 matrices.
    fn metrics_unchecked(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.torus().points())
            .into_par_iter()
            .map(|p| kahler_metric(&restrict_to_base(&at_point(&self.omega, p))))
            .collect()
    }

    /// The Kähler metrics of `ω`, one per grid point.
    pub fn metrics(&self) -> Result<Vec<Metric<f64>>, TorusError> {
        self.metrics_unchecked()
            .into_par_iter()
            .map(|g| Metric::new(g, 1).map_err(TorusError::from))
            .collect()
    }

    /// `|Υ|_ω` from `ω³/6 = ¼ Re(Υ/|Υ|)∧Im(Υ/|Υ|)`.
    pub fn norm_upsilon(&self) -> Field {
        let top = MultiIndex::new(7, &[1, 2, 3, 4, 5, 6]).expect("index");
        let w3 = (&self.omega ^ &self.omega) ^ &self.omega;
        let vol = w3.coeff(top).map(|v| v / 6.0);
        let ru = (self.re_upsilon() ^ self.im_upsilon()).coeff(top).map(|v| v / 4.0);
        ru.div(&vol).sqrt()
    }

    /// `|Υ|_ω = |det h|^{-1/2}` with `h` the Hermitian matrix of the metric.
    pub fn norm_upsilon_hermitian(&self) -> Field {
        Field::from_vec(self.metrics_unchecked().iter().map(|g| hermitian_det(g).norm().powf(-0.5)).collect())
    }

    /// Transverse Ricci form `2 dd^c log|Υ|_ω`.
    pub fn ricci_transverse(&self) -> TorusForm {
        self.calc.ddc(&self.norm_upsilon().ln()).scale(&Field::Const(2.0))
    }

    /// Independent route: `−dd^c log det h`.
    pub fn ricci_from_determinant(&self) -> TorusForm {
        let log_det = Field::from_vec(self.metrics_unchecked().iter().map(|g| hermitian_det(g).norm().ln()).collect());
        -self.calc.ddc(&log_det)
    }
}

/// `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = −e_{2k}` on the 6D base.
fn j_apply(v: usize) -> (usize, f64) {
    if v % 2 == 0 {
        (v + 1, 1.0)
    } else {
        (v - 1, -1.0)
    }
}

/// `g_ij = ω(e_i, J e_j)` from a 6D 2-form.
pub fn kahler_metric(omega: &KForm<f64>) -> Vec<Vec<f64>> {
    let w = |i: usize, j: usize| -> f64 {
        if i == j {
            0.0
        } else if i < j {
            omega.component(&[i, j])
        } else {
            -omega.component(&[j, i])
        }
    };
    let mut g = vec![vec![0.0; 6]; 6];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (k, s) = j_apply(j);
            *v = s * w(i, k);
        }
    }
    g
}

/// `det_ℂ h` with `h_pq = g(e_{x_p}, e_{x_q}) + i g(e_{x_p}, e_{y_q})`.
pub fn hermitian_det(g: &[Vec<f64>]) -> Complex64 {
    let h = |p: usize, q: usize| Complex64::new(g[2 * p][2 * q], g[2 * p][2 * q + 1]);
    h(0, 0) * (h(1, 1) * h(2, 2) - h(1, 2) * h(2, 1)) - h(0, 1) * (h(1, 0) * h(2, 2) - h(1, 2) * h(2, 0))
        + h(0, 2) * (h(1, 0) * h(2, 1) - h(1, 1) * h(2, 0))
}

/// Which 7-dimensional G2-structure is built over the SU(3) data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum G2Model {
    /// `φ = Re(Υ/|Υ|) + |Υ| dθ∧ω` on `ℝ × T⁶`, `dθ = 0`.
    Product,
    /// `η = θ + d^c f` with `dθ = ω₀`, so `dη = ω`: the contact Calabi–Yau case.
    ContactCalabiYau,
    /// `η = θ`, `dη = ω₀`, and `ω′ = ω₀ + dd^c f` only cohomologous to `dη`.
    BrokenSasakian,
}

impl G2Model {
    pub fn convention(self) -> FiberConvention {
        match self {
            G2Model::Product => FiberConvention::Product,
            _ => FiberConvention::Contact,
        }
    }
}

/// G2-structure `φ = Re(Υ/|Υ|) + |Υ| η∧ω` on the torus model, with its
/// metric and dual form stored per grid point.
pub struct TorusG2 {
    pub model: G2Model,
    pub su3: Su3Data,
    pub calc: Calculus,
    /// `|Υ|_ω`.
    pub norm: Field,
    pub eta: TorusForm,
    /// `dη`: `ω₀` for the contact models, zero for the product.
    pub d_eta: TorusForm,
    pub phi: TorusForm,
    pub psi: TorusForm,
    pub structures: Vec<G2Structure<f64>>,
}

impl TorusG2 {
    pub fn build(su3: Su3Data, model: G2Model) -> Result<Self, TorusError> {
        su3.validate()?;
        let calc = Calculus::new(su3.torus().clone(), model.convention());
        let eta = match model {
            G2Model::ContactCalabiYau => fiber_coframe() + calc.dc(su3.potential()),
            _ => fiber_coframe(),
        };
        let d_eta = calc.d(&eta);
        if model == G2Model::ContactCalabiYau {
            let mismatch = max_residual(&(&d_eta - su3.omega()));
            if mismatch > COMPATIBILITY_TOLERANCE {
                return Err(TorusError::Incompatible(mismatch));
            }
        }
        let norm = su3.norm_upsilon();
        let inv = norm.try_inv().ok_or(TorusError::NotPositive { point: 0 })?;
        let phi = su3.re_upsilon().scale(&inv) + (&eta ^ su3.omega()).scale(&norm);
        let structures: Vec<G2Structure<f64>> = (0..calc.points())
            .into_par_iter()
            .map(|p| G2Structure::from_phi(at_point(&phi, p)).map_err(|e| TorusError::G2 { point: p, source: e }))
            .collect::<Result<_, _>>()?;
        let psi_points: Vec<KForm<f64>> = structures.iter().map(|s| s.psi().clone()).collect();
        let psi = assemble(4, &psi_points);
        Ok(TorusG2 { model, su3, calc, norm, eta, d_eta, phi, psi, structures })
    }

    pub fn metrics(&self) -> Vec<Metric<f64>> {
        self.structures.iter().map(|s| s.metric().clone()).collect()
    }

    /// Pointwise Hodge star of the G2 metric.
    pub fn star(&self, a: &TorusForm) -> TorusForm {
        let per_point: Vec<KForm<f64>> =
            (0..self.calc.points()).into_par_iter().map(|p| self.structures[p].star(&at_point(a, p))).collect();
        assemble(7 - a.degree(), &per_point)
    }

    /// `∇ log|Υ|` for the 7D metric.
    pub fn log_norm_gradient(&self) -> Result<TorusVector, TorusError> {
        self.calc.gradient(&self.norm.ln(), &self.metrics())
    }
}

/// Trace of a basic 2-form `κ` against `ω′`: `κ∧ω′² = (tr/3) ω′³`.
pub fn trace_against(kappa: &TorusForm, omega: &TorusForm) -> Field {
    let top = MultiIndex::new(7, &[1, 2, 3, 4, 5, 6]).expect("index");
    let w2 = omega ^ omega;
    let num = (kappa ^ &w2).coeff(top);
    let den = (omega ^ &w2).coeff(top);
    (num * Field::Const(3.0)).div(&den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> Torus {
        Torus::new(16, &[0, 2, 3]).unwrap()
    }

    fn perturbed(amp: f64) -> Su3Data {
        let t = torus();
        let f = t.sample(|x| amp * (x[0].cos() + (x[0] + x[2] + x[3]).sin()));
        Su3Data::from_potential(t, f).unwrap()
    }

    #[test]
    fn flat_norm_is_one() {
        let s = Su3Data::flat(torus());
        assert!((s.norm_upsilon() - Field::Const(1.0)).max_abs() < 1e-14);
        assert!(s.ricci_transverse().is_empty() || max_residual(&s.ricci_transverse()) < 1e-14);
    }

    #[test]
    fn scaling_omega_scales_norm() {
        // ω = c²ω₀ at a point, via the metric oracle.
        let c2: f64 = 1.7;
        let g = kahler_metric(&kahler_form6::<f64>().scale(&c2));
        assert!((hermitian_det(&g).norm().powf(-0.5) - c2.powf(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn norm_matches_hermitian_determinant() {
        let s = perturbed(0.05);
        let a = s.norm_upsilon();
        let b = s.norm_upsilon_hermitian();
        assert!((a.clone() - b).max_abs() < 1e-12);
        assert!(a.max() - a.min() > 1e-3, "perturbed norm should vary");
    }

    #[test]
    fn ricci_matches_determinant_route() {
        let s = perturbed(0.05);
        assert!(max_residual(&(s.ricci_transverse() - s.ricci_from_determinant())) < 1e-10);
    }

    #[test]
    fn hermitian_det_squares_to_real_det() {
        let s = perturbed(0.05);
        for g in s.metrics_unchecked().iter().step_by(97) {
            let real = linalg::determinant(g);
            assert!((hermitian_det(g).norm_sqr() - real).abs() < 1e-12);
            assert!(hermitian_det(g).im.abs() < 1e-12);
        }
    }

    #[test]
    fn type_ii_deformation() {
        let s = perturbed(0.05);
        let same = s.type_ii_deform(&Field::Const(0.0)).unwrap();
        assert_eq!(same.omega(), s.omega());
        let t = torus();
        let big = t.sample(|x| 5.0 * x[0].cos());
        assert!(matches!(s.type_ii_deform(&big), Err(TorusError::NotPositive { .. })));
    }

    #[test]
    fn built_structures_are_coclosed() {
        for model in [G2Model::Product, G2Model::ContactCalabiYau, G2Model::BrokenSasakian] {
            let g2 = TorusG2::build(perturbed(0.05), model).unwrap();
            assert!(max_residual(&g2.calc.d(&g2.psi)) < 1e-8, "{model:?}");
        }
    }

    #[test]
    fn flat_contact_dphi_is_omega_squared() {
        let g2 = TorusG2::build(Su3Data::flat(torus()), G2Model::ContactCalabiYau).unwrap();
        let w = g2.su3.omega().clone();
        assert!(max_residual(&(g2.calc.d(&g2.phi) - (&w ^ &w))) < 1e-12);
        assert_eq!(g2.norm.max_abs(), 1.0);
    }
}
