use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calculus::{
    assemble, at_point, interior, max_residual, mean_residual, Calculus, TorusForm, TorusVector,
};
use super::field::Field;
use super::su3::{trace_against, G2Model, Su3Data, TorusG2};
use super::TorusError;
use crate::algebra::FiberConvention;
use crate::exterior::{KForm, Vector};
use crate::g2::{extract_torsion, TorsionForms};

/// Default acceptance tolerance for spectral residuals.
pub const SPECTRAL_TOLERANCE: f64 = 1e-6;

/// One checked equation: `max`/`mean` of `|LHS − RHS|` over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub id: String,
    /// The formula being checked, in words.
    pub reference: String,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Residual {
    pub fn new(id: &str, reference: &str, max: f64, mean: f64, tolerance: f64) -> Self {
        Residual {
            id: id.to_string(),
            reference: reference.to_string(),
            max,
            mean,
            tolerance,
            passed: max.is_finite() && max < tolerance,
        }
    }

    pub fn of_form(id: &str, reference: &str, form: &TorusForm, points: usize, tolerance: f64) -> Self {
        Self::new(id, reference, max_residual(form), mean_residual(form, points), tolerance)
    }

    pub fn of_field(id: &str, reference: &str, field: &Field, tolerance: f64) -> Self {
        Self::new(id, reference, field.max_abs(), field.mean_abs(), tolerance)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
}

impl ResidualReport {
    pub fn push(&mut self, r: Residual) {
        self.residuals.push(r);
    }

    pub fn get(&self, id: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.id == id)
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.passed)
    }

    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.max).fold(0.0, f64::max)
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.residuals.extend(other.residuals);
    }
}

fn half() -> Field {
    Field::Const(0.5)
}

fn c(v: f64) -> Field {
    Field::Const(v)
}

/// Quantities shared by the closed-form predictions.
struct Ingredients {
    l: Field,
    l2: Field,
    dlog: TorusForm,
    grad: TorusVector,
    omega: TorusForm,
    /// `−η∧ImΥ − ½ω²`
    psi_like: TorusForm,
    /// `tr_ω(dη)`; 3 whenever `ω = dη`.
    trace: Field,
}

fn ingredients(g2: &TorusG2) -> Result<Ingredients, TorusError> {
    let l = g2.norm.clone();
    let omega = g2.su3.omega().clone();
    let psi_like = -(&g2.eta ^ &g2.su3.im_upsilon()) - (&omega ^ &omega).scale(&half());
    let trace = if g2.model == G2Model::Product { c(0.0) } else { trace_against(&g2.d_eta, &omega) };
    Ok(Ingredients {
        l2: l.clone() * l.clone(),
        dlog: g2.calc.d_function(&l.ln()),
        grad: g2.log_norm_gradient()?,
        l,
        omega,
        psi_like,
        trace,
    })
}

/// Torsion forms at every grid point, assembled into fields.
pub fn torsion_fields(g2: &TorusG2) -> Result<TorsionForms<Field>, TorusError> {
    let dphi = g2.calc.d(&g2.phi);
    let dpsi = g2.calc.d(&g2.psi);
    let per_point: Vec<TorsionForms<f64>> = (0..g2.calc.points())
        .into_par_iter()
        .map(|p| {
            extract_torsion(&g2.structures[p], &at_point(&dphi, p), &at_point(&dpsi, p))
                .map_err(|e| TorusError::G2 { point: p, source: e })
        })
        .collect::<Result<_, _>>()?;
    let tau1: Vec<KForm<f64>> = per_point.iter().map(|t| t.tau1.clone()).collect();
    let tau2: Vec<KForm<f64>> = per_point.iter().map(|t| t.tau2.clone()).collect();
    let tau3: Vec<KForm<f64>> = per_point.iter().map(|t| t.tau3.clone()).collect();
    Ok(TorsionForms {
        tau0: Field::from_vec(per_point.iter().map(|t| t.tau0).collect()),
        tau1: assemble(1, &tau1),
        tau2: assemble(2, &tau2),
        tau3: assemble(3, &tau3),
    })
}

/// Extracted torsion against the closed forms for the model.
///
/// Product: `τ0 = τ1 = τ2 = 0`, `τ3 = ∇log|Υ|⌟(−dr∧ImΥ − ½ω²)`.
/// Contact Calabi–Yau: `τ0 = 6/7|Υ|`,
/// `τ3 = ∇log|Υ|⌟(−η∧ImΥ − ½ω²) − 6/7 ReΥ + 8/7|Υ|² η∧ω`.
/// Broken Sasakian: the same with `ω′` and `+8/7|Υ|² η∧dη`; because that
/// statement assumes `tr_{ω′}dη = 3` and `ω′ = dη`, the report also carries
/// the general form `τ0 = 2/7 tr·|Υ|`,
/// `τ3 = ∇log|Υ|⌟(…) − 2tr/7 ReΥ + |Υ|² η∧(5tr/7 ω′ − dη)`.
pub fn check_torsion(g2: &TorusG2) -> Result<ResidualReport, TorusError> {
    let n = g2.calc.points();
    let ing = ingredients(g2)?;
    let tf = torsion_fields(g2)?;
    let mut report = ResidualReport::default();
    let tol = SPECTRAL_TOLERANCE;
    let re = g2.su3.re_upsilon();

    let dphi = g2.calc.d(&g2.phi);
    let dphi_pred = -(&ing.dlog ^ &re).scale(&ing.l.map(f64::recip))
        + ((&ing.dlog ^ &g2.eta) ^ &ing.omega).scale(&ing.l)
        + (&g2.d_eta ^ &ing.omega).scale(&ing.l);
    report.push(Residual::of_form(
        "dphi",
        "dφ = −|Υ|⁻¹ dlog|Υ|∧ReΥ + |Υ| dlog|Υ|∧η∧ω + |Υ| dη∧ω",
        &(dphi - dphi_pred),
        n,
        tol,
    ));
    report.push(Residual::of_form("tau1", "τ1 = 0", &tf.tau1, n, tol));
    report.push(Residual::of_form("tau2", "τ2 = 0", &tf.tau2, n, tol));

    let gradient_part = interior(&ing.grad, &ing.psi_like);
    match g2.model {
        G2Model::Product => {
            report.push(Residual::of_field("tau0", "τ0 = 0", &tf.tau0, tol));
            report.push(Residual::of_form(
                "tau3",
                "τ3 = ∇log|Υ|⌟(−dr∧ImΥ − ½ω²)",
                &(&tf.tau3 - &gradient_part),
                n,
                tol,
            ));
        }
        G2Model::ContactCalabiYau | G2Model::BrokenSasakian => {
            let (tau3_label, last) = if g2.model == G2Model::ContactCalabiYau {
                ("τ3 = ∇log|Υ|⌟(−η∧ImΥ − ½ω²) − 6/7 ReΥ + 8/7|Υ|² η∧ω", &g2.eta ^ &ing.omega)
            } else {
                ("τ3 = ∇log|Υ|⌟(−η∧ImΥ − ½ω′²) − 6/7 ReΥ + 8/7|Υ|² η∧dη", &g2.eta ^ &g2.d_eta)
            };
            let tau0 = ing.l.clone() * c(6.0 / 7.0);
            report.push(Residual::of_field("tau0", "τ0 = 6/7 |Υ|", &(tf.tau0.clone() - tau0), tol));
            let tau3 = &gradient_part - re.scale(&c(6.0 / 7.0)) + last.scale(&(ing.l2.clone() * c(8.0 / 7.0)));
            report.push(Residual::of_form("tau3", tau3_label, &(&tf.tau3 - tau3), n, tol));

            if g2.model == G2Model::BrokenSasakian {
                let tr = ing.trace.clone();
                let tau0 = tr.clone() * ing.l.clone() * c(2.0 / 7.0);
                report.push(Residual::of_field(
                    "tau0_trace",
                    "τ0 = 2/7 tr_{ω′}(dη) |Υ|",
                    &(tf.tau0.clone() - tau0),
                    tol,
                ));
                let inner = ing.omega.scale(&(tr.clone() * c(5.0 / 7.0))) - &g2.d_eta;
                let tau3 = &gradient_part - re.scale(&(tr * c(2.0 / 7.0)))
                    + (&g2.eta ^ &inner).scale(&ing.l2);
                report.push(Residual::of_form(
                    "tau3_trace",
                    "τ3 = ∇log|Υ|⌟(−η∧ImΥ − ½ω′²) − 2tr/7 ReΥ + |Υ|² η∧(5tr/7 ω′ − dη)",
                    &(&tf.tau3 - tau3),
                    n,
                    tol,
                ));
            }
        }
    }
    Ok(report)
}

/// `d∗dφ` against the closed form for the model, plus `dψ = 0`.
///
/// Product: `Δψ = 𝓛_X(−dr∧ImΥ − ½ω²)` with `X = ∇log|Υ|`.
/// Contact Calabi–Yau: `+ 4|Υ|² dlog|Υ|∧η∧ω + 2|Υ|²ω²`.
/// Broken Sasakian: `+ 2|Υ|² dlog|Υ|∧η∧[3ω′ − dη] + |Υ|² dη∧[3ω′ − dη]`,
/// and in general `[tr·ω′ − dη]` with an extra `|Υ|² dtr∧η∧ω′`.
pub fn check_laplacian(g2: &TorusG2) -> Result<ResidualReport, TorusError> {
    let n = g2.calc.points();
    let ing = ingredients(g2)?;
    let mut report = ResidualReport::default();
    let dpsi = g2.calc.d(&g2.psi);
    report.push(Residual::of_form("dpsi", "dψ = 0", &dpsi, n, 1e-8));

    let laplacian = g2.calc.d(&g2.star(&g2.calc.d(&g2.phi)));
    let lie = g2.calc.lie_derivative(&ing.grad, &ing.psi_like);
    let eta_omega = &g2.eta ^ &ing.omega;
    match g2.model {
        G2Model::Product => {
            report.push(Residual::of_form(
                "laplacian",
                "Δψ = 𝓛_{∇log|Υ|}(−dr∧ImΥ − ½ω²)",
                &(&laplacian - &lie),
                n,
                SPECTRAL_TOLERANCE,
            ));
        }
        G2Model::ContactCalabiYau => {
            let pred = &lie
                + (&ing.dlog ^ &eta_omega).scale(&(ing.l2.clone() * c(4.0)))
                + (&ing.omega ^ &ing.omega).scale(&(ing.l2.clone() * c(2.0)));
            report.push(Residual::of_form(
                "laplacian",
                "Δψ = 𝓛_{∇log|Υ|}(−η∧ImΥ − ½ω²) + 4|Υ|² dlog|Υ|∧η∧ω + 2|Υ|²ω²",
                &(&laplacian - pred),
                n,
                SPECTRAL_TOLERANCE,
            ));
        }
        G2Model::BrokenSasakian => {
            let bracket = |tr: &Field| ing.omega.scale(tr) - &g2.d_eta;
            let stated = bracket(&c(3.0));
            let pred = &lie
                + ((&ing.dlog ^ &g2.eta) ^ &stated).scale(&(ing.l2.clone() * c(2.0)))
                + (&g2.d_eta ^ &stated).scale(&ing.l2);
            report.push(Residual::of_form(
                "laplacian",
                "Δψ = 𝓛_{∇log|Υ|}(−η∧ImΥ − ½ω′²) + 2|Υ|² dlog|Υ|∧η∧[3ω′ − dη] + |Υ|² dη∧[3ω′ − dη]",
                &(&laplacian - pred),
                n,
                SPECTRAL_TOLERANCE,
            ));
            let general = bracket(&ing.trace);
            let dtr = g2.calc.d_function(&ing.trace);
            let pred = &lie
                + ((&ing.dlog ^ &g2.eta) ^ &general).scale(&(ing.l2.clone() * c(2.0)))
                + (&dtr ^ &eta_omega).scale(&ing.l2)
                + (&g2.d_eta ^ &general).scale(&ing.l2);
            report.push(Residual::of_form(
                "laplacian_trace",
                "Δψ = 𝓛_{∇log|Υ|}(−η∧ImΥ − ½ω′²) + 2|Υ|² dlog|Υ|∧η∧[tr ω′ − dη] + |Υ|² dtr∧η∧ω′ + |Υ|² dη∧[tr ω′ − dη]",
                &(&laplacian - pred),
                n,
                SPECTRAL_TOLERANCE,
            ));
        }
    }
    Ok(report)
}

/// `𝓛_{∇log|Υ|}ω = 2i∂∂̄ log|Υ| = Ric`, by three routes: the Lie derivative
/// along the Kähler gradient, `2dd^c log|Υ|`, and `−dd^c log det h`.
pub fn check_kahler_identity(su3: &Su3Data) -> Result<ResidualReport, TorusError> {
    let calc = Calculus::new(su3.torus().clone(), FiberConvention::Product);
    let n = calc.points();
    let metrics = su3.metrics()?;
    let grad = calc.gradient(&su3.norm_upsilon().ln(), &metrics)?;
    let lie = calc.lie_derivative(&grad, su3.omega());
    let ricci = su3.ricci_transverse();
    let oracle = su3.ricci_from_determinant();
    let mut report = ResidualReport::default();
    report.push(Residual::of_form(
        "lie_vs_ddc",
        "𝓛_{∇log|Υ|}ω = 2i∂∂̄ log|Υ|",
        &(&lie - &ricci),
        n,
        SPECTRAL_TOLERANCE,
    ));
    report.push(Residual::of_form(
        "ricci_vs_determinant",
        "2i∂∂̄ log|Υ| = −i∂∂̄ log det h",
        &(&ricci - &oracle),
        n,
        SPECTRAL_TOLERANCE,
    ));
    Ok(report)
}

/// Largest `|g(∇f, X) − df(X)|` over the grid for a fixed vector `X`.
pub fn gradient_duality_residual(calc: &Calculus, f: &Field, su3: &Su3Data, x: &[f64; 6]) -> Result<f64, TorusError> {
    let metrics = su3.metrics()?;
    let grad = calc.gradient(f, &metrics)?;
    let df = calc.d_function(f);
    let mut worst: f64 = 0.0;
    for (p, m) in metrics.iter().enumerate() {
        let g: Vec<f64> = grad.components[1..].iter().map(|c| c.value(p)).collect();
        let lhs = m.apply(&Vector::new(g), &Vector::new(x.to_vec()));
        let rhs: f64 = (0..6).map(|i| df.component(&[i + 1]).value(p) * x[i]).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Torus;

    fn perturbed() -> Su3Data {
        let t = Torus::new(16, &[0, 2, 3]).unwrap();
        let f = t.sample(|x| 0.05 * (x[0].cos() + (x[0] + x[2] + x[3]).sin()));
        Su3Data::from_potential(t, f).unwrap()
    }

    #[test]
    fn flat_product_is_torsion_free() {
        let t = Torus::new(8, &[0]).unwrap();
        let g2 = TorusG2::build(Su3Data::flat(t), G2Model::Product).unwrap();
        let tf = torsion_fields(&g2).unwrap();
        assert!(tf.tau0.max_abs() < 1e-14 && max_residual(&tf.tau3) < 1e-14);
    }

    #[test]
    fn flat_contact_laplacian_is_two_omega_squared() {
        let t = Torus::new(8, &[0]).unwrap();
        let g2 = TorusG2::build(Su3Data::flat(t), G2Model::ContactCalabiYau).unwrap();
        let report = check_laplacian(&g2).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn perturbed_product_and_contact_match() {
        for model in [G2Model::Product, G2Model::ContactCalabiYau] {
            let g2 = TorusG2::build(perturbed(), model).unwrap();
            let mut report = check_torsion(&g2).unwrap();
            report.extend(check_laplacian(&g2).unwrap());
            assert!(report.passed(), "{model:?}: {report:#?}");
        }
    }

    #[test]
    fn broken_sasakian_general_formulas_match() {
        let g2 = TorusG2::build(perturbed(), G2Model::BrokenSasakian).unwrap();
        let mut report = check_torsion(&g2).unwrap();
        report.extend(check_laplacian(&g2).unwrap());
        for id in ["dphi", "tau1", "tau2", "tau0_trace", "tau3_trace", "dpsi", "laplacian_trace"] {
            assert!(report.get(id).unwrap().passed, "{id}: {report:#?}");
        }
    }

    #[test]
    fn kahler_identity_holds() {
        let report = check_kahler_identity(&perturbed()).unwrap();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn gradient_is_metric_dual_of_differential() {
        let su3 = perturbed();
        let f = su3.torus().sample(|x| (x[2] - x[0]).sin());
        let r = gradient_duality_residual(su3.calculus(), &f, &su3, &[0.3, -1.2, 0.7, 0.1, 2.0, -0.5]).unwrap();
        assert!(r < 1e-10);
    }
}
