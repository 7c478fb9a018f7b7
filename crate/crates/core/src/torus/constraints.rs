use serde::{Deserialize, Serialize};

use super::calculus::{assemble, at_point, constant_basic, fiber_coframe, restrict_to_base, Calculus, TorusForm};
use super::checks::{Residual, ResidualReport};
use super::field::{Field, Torus};
use super::su3::Su3Data;
use super::TorusError;
use crate::algebra::FiberConvention;
use crate::exterior::{KForm, MultiIndex};
use crate::g2::{im_upsilon6, kahler_form6, re_upsilon6};
use crate::linalg;
use crate::scalar::Coefficient;

/// Default tolerance for constraint residuals of constructed slices.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-8;

/// Which flow characterization a slice is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintModel {
    /// Product, Laplacian coflow: `β∧ω_t = 0`, `Imγ = 0`.
    ProductLcf,
    /// Product, modified coflow.
    ProductMlcf,
    /// Contact Calabi–Yau, Laplacian coflow.
    CcyLcf,
    /// Contact Calabi–Yau, modified coflow.
    CcyMlcf,
    /// Broken Sasakian, Laplacian coflow.
    BrokenLcf,
    /// Broken Sasakian, modified coflow.
    BrokenMlcf,
}

impl ConstraintModel {
    pub const ALL: [ConstraintModel; 6] = [
        ConstraintModel::ProductLcf,
        ConstraintModel::ProductMlcf,
        ConstraintModel::CcyLcf,
        ConstraintModel::CcyMlcf,
        ConstraintModel::BrokenLcf,
        ConstraintModel::BrokenMlcf,
    ];

    fn is_broken(self) -> bool {
        matches!(self, ConstraintModel::BrokenLcf | ConstraintModel::BrokenMlcf)
    }

    fn is_modified(self) -> bool {
        matches!(self, ConstraintModel::ProductMlcf | ConstraintModel::CcyMlcf | ConstraintModel::BrokenMlcf)
    }
}

/// One time slice of a deformation `ω_t = ω₀ + dd^c f`, with the velocity
/// data `∂_t d^c f = d^c ḟ`, `β`, `γ = Reγ + i Imγ` and (broken case) `α`.
///
/// Forms are basic 7D forms (no `dθ` component).
#[derive(Clone, Debug)]
pub struct DeformationSlice {
    pub f: Field,
    pub f_dot: Field,
    pub beta: TorusForm,
    pub gamma_re: TorusForm,
    pub gamma_im: TorusForm,
    pub alpha: TorusForm,
}

impl DeformationSlice {
    pub fn zero() -> Self {
        DeformationSlice {
            f: Field::Const(0.0),
            f_dot: Field::Const(0.0),
            beta: KForm::zero(7, 2),
            gamma_re: KForm::zero(7, 3),
            gamma_im: KForm::zero(7, 3),
            alpha: KForm::zero(7, 1),
        }
    }

    fn validate(&self) -> Result<(), TorusError> {
        let shapes = [(&self.beta, 2, "beta"), (&self.gamma_re, 3, "gamma_re"), (&self.gamma_im, 3, "gamma_im"), (&self.alpha, 1, "alpha")];
        for (form, degree, name) in shapes {
            if form.dim() != 7 || form.degree() != degree {
                return Err(TorusError::Shape(format!("{name} must be a {degree}-form on the 7D model")));
            }
            if form.terms().any(|(i, _)| i.contains(0)) {
                return Err(TorusError::Shape(format!("{name} must be basic")));
            }
        }
        Ok(())
    }
}

/// Everything the constraint equations are built from at one slice.
struct SliceData {
    calc: Calculus,
    omega: TorusForm,
    omega_ref: TorusForm,
    re: TorusForm,
    im: TorusForm,
    l: Field,
    l2: Field,
    dlog: TorusForm,
    /// `−(𝓛_X d^c f)∧ImΥ − (X⌟ω₀)∧ImΥ + (d^c ḟ)∧ImΥ`, `X = ∇_t log|Υ_t|`.
    tail: TorusForm,
}

fn slice_data(torus: &Torus, f: &Field, f_dot: &Field) -> Result<SliceData, TorusError> {
    // Compatibility is re-validated at every slice rather than assumed to persist.
    let su3 = Su3Data::from_potential(torus.clone(), f.clone())?;
    let calc = Calculus::new(torus.clone(), FiberConvention::Product);
    let l = su3.norm_upsilon();
    let log = l.ln();
    let grad = calc.gradient(&log, &su3.metrics()?)?;
    let im = su3.im_upsilon();
    let omega_ref = constant_basic(&kahler_form6());
    let lie = calc.lie_derivative(&grad, &calc.dc(f));
    let contracted = omega_ref.interior(&grad)?;
    let tail = -(lie ^ &im) - (contracted ^ &im) + (calc.dc(f_dot) ^ &im);
    Ok(SliceData {
        dlog: calc.d_function(&log),
        l2: l.clone() * l.clone(),
        omega: su3.omega().clone(),
        re: su3.re_upsilon(),
        im,
        omega_ref,
        calc,
        l,
        tail,
    })
}

fn c(v: f64) -> Field {
    Field::Const(v)
}

/// Right-hand sides `(β-equation, γ-equation)` for the product and contact
/// Calabi–Yau models: `β∧ω_t = R_β`, `Imγ = R_γ`.
fn product_ccy_rhs(model: ConstraintModel, s: &SliceData, a: f64) -> (TorusForm, TorusForm) {
    let w2 = &s.omega ^ &s.omega;
    let dlog_re = &s.dlog ^ &s.re;
    let dlog_w = &s.dlog ^ &s.omega;
    let inv_l = s.l.map(f64::recip);
    match model {
        ConstraintModel::ProductLcf => (KForm::zero(7, 4), KForm::zero(7, 3)),
        ConstraintModel::ProductMlcf => (-dlog_re.scale(&(inv_l * c(a))), dlog_w.scale(&(s.l.clone() * c(a)))),
        ConstraintModel::CcyLcf => (w2.scale(&(s.l2.clone() * c(2.0))) + &s.tail, dlog_w.scale(&(s.l2.clone() * c(4.0)))),
        ConstraintModel::CcyMlcf => (
            w2.scale(&(s.l.clone() * c(a) - s.l2.clone())) - dlog_re.scale(&(inv_l * c(a))) + &s.tail,
            dlog_w.scale(&(s.l.clone() * c(a) - s.l2.clone() * c(2.0))),
        ),
        _ => unreachable!("broken models use the 7D equation"),
    }
}

/// Right-hand side of `−η∧γ − ω′∧β = R` for the broken Sasakian models,
/// with `η = θ`, `dη = ω₀`, and `α_t` prescribed separately.
fn broken_rhs(model: ConstraintModel, s: &SliceData, a: f64) -> (TorusForm, TorusForm) {
    let eta = fiber_coframe();
    let bracket = s.omega.scale(&c(3.0)) - &s.omega_ref;
    let dlog_eta = &s.dlog ^ &eta;
    let mut rhs = (&dlog_eta ^ &bracket).scale(&(s.l2.clone() * c(2.0))) + (&s.omega_ref ^ &bracket).scale(&s.l2);
    let mut alpha = KForm::zero(7, 1);
    if model == ConstraintModel::BrokenMlcf {
        let al = s.l.clone() * c(a);
        rhs = rhs + (&dlog_eta ^ &s.omega).scale(&(al.clone() - s.l2.clone() * c(6.0)))
            + (&s.omega_ref ^ &s.omega).scale(&(al - s.l2.clone() * c(3.0)));
        alpha = s.dlog.scale(&s.l.map(|l| a / l));
    }
    (rhs, alpha)
}

/// `LHS − RHS` of the constraint equations of `model` at one slice.
///
/// Product/contact models report `beta` (`β∧ω_t − R_β`) and `gamma`
/// (`Imγ − R_γ`); broken models report `alpha` and the 7D `main` equation.
pub fn constraint_residual(
    model: ConstraintModel,
    slice: &DeformationSlice,
    torus: &Torus,
    a: f64,
) -> Result<ResidualReport, TorusError> {
    slice.validate()?;
    let s = slice_data(torus, &slice.f, &slice.f_dot)?;
    let n = torus.points();
    let tol = CONSTRAINT_TOLERANCE;
    let mut report = ResidualReport::default();
    if model.is_broken() {
        let (rhs, alpha) = broken_rhs(model, &s, a);
        let lhs = -(fiber_coframe() ^ &slice.gamma_im) - (&s.omega ^ &slice.beta);
        let alpha_label = if model.is_modified() { "α = A|Υ|⁻¹ dlog|Υ|" } else { "α = 0" };
        report.push(Residual::of_form("alpha", alpha_label, &(&slice.alpha - alpha), n, tol));
        let label = if model.is_modified() {
            "−η∧Imγ − ω′∧β = 2|Υ|² dlog|Υ|∧η∧[3ω′ − dη] + |Υ|² dη∧[3ω′ − dη] + A|Υ| dlog|Υ|∧η∧ω′ + A|Υ| dη∧ω′ − 6|Υ|² dlog|Υ|∧η∧ω′ − 3|Υ|² dη∧ω′"
        } else {
            "−η∧Imγ − ω′∧β = 2|Υ|² dlog|Υ|∧η∧[3ω′ − dη] + |Υ|² dη∧[3ω′ − dη]"
        };
        report.push(Residual::of_form("main", label, &(lhs - rhs), n, tol));
    } else {
        let (rb, rg) = product_ccy_rhs(model, &s, a);
        let (beta_label, gamma_label) = match model {
            ConstraintModel::ProductLcf => ("β∧ω_t = 0", "Imγ = 0"),
            ConstraintModel::ProductMlcf => ("β∧ω_t = −A|Υ|⁻¹ dlog|Υ|∧ReΥ", "Imγ = A|Υ| dlog|Υ|∧ω_t"),
            ConstraintModel::CcyLcf => (
                "β∧ω_t = 2|Υ|²ω_t² − (𝓛_X d^c f)∧ImΥ − (X⌟ω)∧ImΥ + (d^c ḟ)∧ImΥ",
                "Imγ = 4|Υ|² dlog|Υ|∧ω_t",
            ),
            _ => (
                "β∧ω_t = −|Υ|²ω_t² + A|Υ|ω_t² − A|Υ|⁻¹ dlog|Υ|∧ReΥ − (𝓛_X d^c f)∧ImΥ − (X⌟ω)∧ImΥ + (d^c ḟ)∧ImΥ",
                "Imγ = −2|Υ|² dlog|Υ|∧ω_t + A|Υ| dlog|Υ|∧ω_t",
            ),
        };
        report.push(Residual::of_form("beta", beta_label, &((&slice.beta ^ &s.omega) - rb), n, tol));
        report.push(Residual::of_form("gamma", gamma_label, &(&slice.gamma_im - rg), n, tol));
    }
    Ok(report)
}

/// The single 7D equation of the contact Calabi–Yau models before it is
/// split by type: `−(d^c ḟ)∧ImΥ − η_t∧Imγ + β∧ω_t − RHS` with
/// `η_t = θ + d^c f`. Its contraction with `∂_θ` is minus the γ-residual,
/// and what remains after removing `η_t∧(∂_θ⌟·)` is the β-residual.
pub fn ccy_combined_residual(
    model: ConstraintModel,
    slice: &DeformationSlice,
    torus: &Torus,
    a: f64,
) -> Result<TorusForm, TorusError> {
    if !matches!(model, ConstraintModel::CcyLcf | ConstraintModel::CcyMlcf) {
        return Err(TorusError::Shape("combined equation exists only for the contact Calabi–Yau models".into()));
    }
    slice.validate()?;
    let s = slice_data(torus, &slice.f, &slice.f_dot)?;
    let eta = fiber_coframe() + s.calc.dc(&slice.f);
    let w2 = &s.omega ^ &s.omega;
    let dlog_eta_w = (&s.dlog ^ &eta) ^ &s.omega;
    let dc_dot = s.calc.dc(&slice.f_dot);
    let lhs = -(dc_dot ^ &s.im) - (&eta ^ &slice.gamma_im) + (&slice.beta ^ &s.omega);
    // Everything of the tail except the velocity term sits on the right.
    let velocity = s.calc.dc(&slice.f_dot) ^ &s.im;
    let mut rhs = dlog_eta_w.scale(&(s.l2.clone() * c(4.0))) + w2.scale(&(s.l2.clone() * c(2.0))) + (&s.tail - velocity);
    if model == ConstraintModel::CcyMlcf {
        let al = s.l.clone() * c(a);
        rhs = rhs - (&s.dlog ^ &s.re).scale(&s.l.map(|l| a / l))
            + dlog_eta_w.scale(&(al.clone() - s.l2.clone() * c(6.0)))
            + w2.scale(&(al - s.l2.clone() * c(3.0)));
    }
    Ok(lhs - rhs)
}

/// Build a slice satisfying the equations of `model` for given `f`, `ḟ`, `A`.
///
/// `β` comes from inverting `β ↦ β∧ω_t` pointwise (an isomorphism Ω² → Ω⁴
/// on the base); `Reγ` is left zero since only `Imγ` is constrained.
pub fn construct_slice(
    model: ConstraintModel,
    torus: &Torus,
    f: &Field,
    f_dot: &Field,
    a: f64,
) -> Result<DeformationSlice, TorusError> {
    let s = slice_data(torus, f, f_dot)?;
    let (beta, gamma_im, alpha) = if model.is_broken() {
        let (rhs, alpha) = broken_rhs(model, &s, a);
        let fiber_part = rhs.contract_axis(0)?;
        let basic_part = &rhs - (fiber_coframe() ^ &fiber_part);
        (-invert_lefschetz(&basic_part, &s.omega, torus)?, -fiber_part, alpha)
    } else {
        let (rb, rg) = product_ccy_rhs(model, &s, a);
        (invert_lefschetz(&rb, &s.omega, torus)?, rg, KForm::zero(7, 1))
    };
    Ok(DeformationSlice { f: f.clone(), f_dot: f_dot.clone(), beta, gamma_re: KForm::zero(7, 3), gamma_im, alpha })
}

/// Basic 2-form `β` with `β∧ω = target` at every grid point.
pub fn invert_lefschetz(target: &TorusForm, omega: &TorusForm, torus: &Torus) -> Result<TorusForm, TorusError> {
    let cols = MultiIndex::subsets(6, 2);
    let rows = MultiIndex::subsets(6, 4);
    let per_point: Vec<KForm<f64>> = (0..torus.points())
        .map(|p| {
            let w = restrict_to_base(&at_point(omega, p));
            let t = restrict_to_base(&at_point(target, p));
            let images: Vec<KForm<f64>> =
                cols.iter().map(|c| KForm::from_terms(6, 2, [(*c, 1.0)]).expect("basis") ^ &w).collect();
            let m: Vec<Vec<f64>> = rows.iter().map(|r| images.iter().map(|img| img.coeff(*r)).collect()).collect();
            let rhs: Vec<f64> = rows.iter().map(|r| t.coeff(*r)).collect();
            let x = linalg::solve(&m, &rhs).ok_or(TorusError::NotPositive { point: p })?;
            Ok(KForm::from_terms(6, 2, cols.iter().copied().zip(x)).expect("2-form").embed(7, 1).expect("6 → 7"))
        })
        .collect::<Result<_, TorusError>>()?;
    Ok(assemble(2, &per_point))
}

/// `(J*α)(X, …) = α(JX, …)` for a basic form, with the standard `J`.
pub fn j_pullback(a: &TorusForm) -> TorusForm {
    let j = |axis: usize| -> (usize, f64) {
        // 7D axes: (1,2), (3,4), (5,6) are the (x, y) pairs.
        if axis % 2 == 1 {
            (axis + 1, 1.0)
        } else {
            (axis - 1, -1.0)
        }
    };
    let mut out = KForm::zero(7, a.degree());
    for k in MultiIndex::subsets(7, a.degree()) {
        if k.contains(0) {
            continue;
        }
        let mut sign = 1.0;
        let image: Vec<usize> = k
            .axes()
            .map(|ax| {
                let (b, s) = j(ax);
                sign *= s;
                b
            })
            .collect();
        let v = a.component(&image);
        if !v.is_zero() {
            out.accumulate(k, v * Field::Const(sign));
        }
    }
    out
}

/// The (1,1) part `½(β + J*β)` of a real basic 2-form.
pub fn part_11(beta: &TorusForm) -> TorusForm {
    (beta + j_pullback(beta)).scale(&Field::Const(0.5))
}

/// The (3,0)+(0,3) part of a real basic 3-form: its projection onto
/// `span{ReΥ, ImΥ}` (orthogonal, `|ReΥ|² = |ImΥ|² = 4`).
pub fn part_30_03(gamma: &TorusForm) -> TorusForm {
    let mut out = KForm::zero(7, 3);
    for basis in [re_upsilon6::<f64>(), im_upsilon6::<f64>()] {
        let lifted = constant_basic(&basis);
        let mut coeff = Field::Const(0.0);
        for (i, b) in lifted.terms() {
            coeff = coeff + gamma.coeff(i) * b.clone();
        }
        out = out + lifted.scale(&(coeff * Field::Const(0.25)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::max_residual;

    fn setup() -> (Torus, Field, Field) {
        let t = Torus::new(16, &[0, 2, 3]).unwrap();
        let f = t.sample(|x| 0.05 * (x[0].cos() + (x[0] + x[2] + x[3]).sin()));
        let f_dot = t.sample(|x| 0.02 * (x[2] - x[3]).cos());
        (t, f, f_dot)
    }

    #[test]
    fn flat_zero_slice_leaves_the_omega_squared_term() {
        let t = Torus::new(8, &[0]).unwrap();
        let report = constraint_residual(ConstraintModel::CcyLcf, &DeformationSlice::zero(), &t, 0.0).unwrap();
        // β-equation: 0 − 2ω² has coefficient 2·2 = 4 on each dx^{1234}-type term.
        assert!((report.get("beta").unwrap().max - 4.0).abs() < 1e-14);
        assert_eq!(report.get("gamma").unwrap().max, 0.0);
        let product = constraint_residual(ConstraintModel::ProductMlcf, &DeformationSlice::zero(), &t, 0.0).unwrap();
        assert_eq!(product.max(), 0.0);
    }

    #[test]
    fn constructed_slices_satisfy_their_equations() {
        let (t, f, f_dot) = setup();
        for model in ConstraintModel::ALL {
            let slice = construct_slice(model, &t, &f, &f_dot, 0.7).unwrap();
            let report = constraint_residual(model, &slice, &t, 0.7).unwrap();
            assert!(report.passed(), "{model:?}: {report:#?}");
        }
    }

    #[test]
    fn product_slices_have_the_predicted_bidegrees() {
        let (t, f, f_dot) = setup();
        let slice = construct_slice(ConstraintModel::ProductMlcf, &t, &f, &f_dot, 1.3).unwrap();
        assert!(max_residual(&slice.beta) > 1e-4);
        assert!(max_residual(&part_11(&slice.beta)) < 1e-12);
        assert!(max_residual(&slice.gamma_im) > 1e-4);
        assert!(max_residual(&part_30_03(&slice.gamma_im)) < 1e-12);
    }

    #[test]
    fn type_projections_on_constant_forms() {
        let w = constant_basic(&kahler_form6());
        assert_eq!(part_11(&w), w);
        let re = constant_basic(&re_upsilon6());
        assert!(max_residual(&(part_30_03(&re) - &re)) < 1e-15);
        assert!(part_11(&re.contract_axis(1).unwrap()).is_zero());
    }

    #[test]
    fn contraction_with_fiber_isolates_gamma_equation() {
        let (t, f, f_dot) = setup();
        for model in [ConstraintModel::CcyLcf, ConstraintModel::CcyMlcf] {
            let mut slice = construct_slice(model, &t, &f, &f_dot, 0.4).unwrap();
            // Perturb so that both residuals are nonzero.
            slice.gamma_im = &slice.gamma_im + constant_basic(&re_upsilon6()).scale(&Field::Const(0.1));
            slice.beta = &slice.beta + constant_basic(&kahler_form6()).scale(&Field::Const(0.2));
            let combined = ccy_combined_residual(model, &slice, &t, 0.4).unwrap();
            let s = slice_data(&t, &f, &f_dot).unwrap();
            let (rb, rg) = product_ccy_rhs(model, &s, 0.4);
            let r_gamma = &slice.gamma_im - rg;
            let r_beta = (&slice.beta ^ &s.omega) - rb;
            assert!(max_residual(&(combined.contract_axis(0).unwrap() + &r_gamma)) < 1e-12);
            // Split along η_t = θ + d^c f, not θ: the horizontal part is the β-residual.
            let eta = fiber_coframe() + s.calc.dc(&f);
            let basic = &combined - (eta ^ combined.contract_axis(0).unwrap());
            assert!(max_residual(&(basic - r_beta)) < 1e-12);
            assert!(max_residual(&r_gamma) > 1e-3);
        }
    }

    #[test]
    fn flat_a0_slices_have_constant_beta() {
        let t = Torus::new(8, &[0]).unwrap();
        let zero = Field::Const(0.0);
        let w = constant_basic(&kahler_form6());
        for (model, k) in [
            (ConstraintModel::CcyLcf, 2.0),
            (ConstraintModel::CcyMlcf, -1.0),
            (ConstraintModel::BrokenLcf, -2.0),
            (ConstraintModel::BrokenMlcf, 1.0),
        ] {
            let slice = construct_slice(model, &t, &zero, &zero, 0.0).unwrap();
            assert!(max_residual(&(&slice.beta - w.scale(&Field::Const(k)))) < 1e-12, "{model:?}");
            assert!(max_residual(&slice.gamma_im) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_basic_slices() {
        let t = Torus::new(8, &[0]).unwrap();
        let mut slice = DeformationSlice::zero();
        slice.beta = KForm::basis(7, &[0, 1]).unwrap();
        assert!(matches!(
            constraint_residual(ConstraintModel::ProductLcf, &slice, &t, 0.0),
            Err(TorusError::Shape(_))
        ));
    }
}
