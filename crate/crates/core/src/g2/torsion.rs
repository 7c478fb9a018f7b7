use super::decompose::{decompose2, gram_coefficients, omega3_7_basis};
use super::{G2Error, G2Structure};
use crate::exterior::{KForm, MultiIndex, Vector};
use crate::linalg;
use crate::scalar::Coefficient;

/// Relative tolerance for the reconstruction and type checks.
pub const TORSION_TOLERANCE: f64 = 1e-10;

/// Square 7×7 coefficient matrix (not necessarily symmetric).
pub type Tensor2<S> = Vec<Vec<S>>;

/// The torsion forms `(τ0, τ1, τ2, τ3)` of a G2-structure, defined by
/// `dφ = τ0ψ + 3τ1∧φ + ∗τ3` and `dψ = 4τ1∧ψ + τ2∧φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionForms<S> {
    pub tau0: S,
    pub tau1: KForm<S>,
    pub tau2: KForm<S>,
    pub tau3: KForm<S>,
}

impl<S: Coefficient> TorsionForms<S> {
    /// `τ0ψ + 3τ1∧φ + ∗τ3`.
    pub fn rebuild_dphi(&self, s: &G2Structure<S>) -> KForm<S> {
        s.psi().scale(&self.tau0) + (&self.tau1 ^ s.phi()).scale(&S::from_int(3)) + s.star(&self.tau3)
    }

    /// `4τ1∧ψ + τ2∧φ`.
    pub fn rebuild_dpsi(&self, s: &G2Structure<S>) -> KForm<S> {
        (&self.tau1 ^ s.psi()).scale(&S::from_int(4)) + (&self.tau2 ^ s.phi())
    }

    pub fn is_zero(&self) -> bool {
        self.tau0.is_zero() && self.tau1.is_zero() && self.tau2.is_zero() && self.tau3.is_zero()
    }
}

fn scalar_part<S: Coefficient>(f: &KForm<S>) -> S {
    f.coeff(MultiIndex::EMPTY)
}

/// Torsion forms from the exterior derivatives of `φ` and `ψ`.
pub fn extract_torsion<S: Coefficient>(
    s: &G2Structure<S>,
    dphi: &KForm<S>,
    dpsi: &KForm<S>,
) -> Result<TorsionForms<S>, G2Error> {
    extract_torsion_with_tolerance(s, dphi, dpsi, TORSION_TOLERANCE)
}

pub fn extract_torsion_with_tolerance<S: Coefficient>(
    s: &G2Structure<S>,
    dphi: &KForm<S>,
    dpsi: &KForm<S>,
    tol: f64,
) -> Result<TorsionForms<S>, G2Error> {
    if dphi.dim() != 7 || dphi.degree() != 4 {
        return Err(G2Error::Shape { dim: dphi.dim(), degree: dphi.degree() });
    }
    if dpsi.dim() != 7 || dpsi.degree() != 5 {
        return Err(G2Error::Shape { dim: dpsi.dim(), degree: dpsi.degree() });
    }
    let scale = 1f64.max(dphi.max_magnitude()).max(dpsi.max_magnitude());
    let tau0 = scalar_part(&s.star(&(s.phi() ^ dphi))) * S::from_ratio(1, 7);

    let (tau1, tau2) = if dpsi.is_zero() {
        (KForm::zero(7, 1), KForm::zero(7, 2))
    } else {
        // Ω⁵₇ = {α∧ψ} is orthogonal to Ω⁵₁₄ = {β∧φ : β ∈ Ω²₁₄}.
        let basis: Vec<KForm<S>> = (0..7)
            .map(|i| KForm::<S>::basis(7, &[i]).expect("basis") ^ s.psi())
            .collect();
        let c = gram_coefficients(dpsi, &basis, s)?;
        let quarter = S::from_ratio(1, 4);
        let tau1 = KForm::from_terms(
            7,
            1,
            c.iter().enumerate().map(|(i, ci)| (MultiIndex::single(i), ci.clone() * quarter.clone())),
        )?;
        let rest = dpsi - (&tau1 ^ s.psi()).scale(&S::from_int(4));
        let beta = invert_wedge_phi(&rest, s);
        let (_, tau2) = decompose2(&beta, s)?;
        (tau1, tau2)
    };

    let remainder = dphi - s.psi().scale(&tau0) - (&tau1 ^ s.phi()).scale(&S::from_int(3));
    let tau3 = s.star(&remainder);
    let tf = TorsionForms { tau0, tau1, tau2, tau3 };

    let bound = tol * scale;
    let mut worst = (tf.rebuild_dphi(s) - dphi).max_magnitude();
    worst = worst.max((tf.rebuild_dpsi(s) - dpsi).max_magnitude());
    worst = worst.max(s.inner(&tf.tau3, s.phi())?.magnitude());
    if !tf.tau3.is_zero() {
        let c7 = gram_coefficients(&tf.tau3, &omega3_7_basis(s), s)?;
        worst = worst.max(c7.iter().map(Coefficient::magnitude).fold(0.0, f64::max));
    }
    if worst > bound {
        return Err(G2Error::Reconstruction(worst));
    }
    Ok(tf)
}

/// Least-squares `β` with `β∧φ = target`; the map is an isomorphism Ω² → Ω⁵.
fn invert_wedge_phi<S: Coefficient>(target: &KForm<S>, s: &G2Structure<S>) -> KForm<S> {
    let cols = MultiIndex::subsets(7, 2);
    let rows = MultiIndex::subsets(7, 5);
    let images: Vec<KForm<S>> = cols
        .iter()
        .map(|c| KForm::from_terms(7, 2, [(*c, S::one())]).expect("basis") ^ s.phi())
        .collect();
    let m: Vec<Vec<S>> = rows
        .iter()
        .map(|r| images.iter().map(|img| img.coeff(*r)).collect())
        .collect();
    let rhs: Vec<S> = rows.iter().map(|r| target.coeff(*r)).collect();
    let x = linalg::least_squares(&m, &rhs);
    KForm::from_terms(7, 2, cols.into_iter().zip(x)).expect("2-form")
}

/// `j(γ)_ij = ∗((e_i⌟φ)∧(e_j⌟φ)∧γ)`.
pub fn j_operator<S: Coefficient>(gamma: &KForm<S>, s: &G2Structure<S>) -> Tensor2<S> {
    let c: Vec<KForm<S>> = (0..7)
        .map(|i| s.phi().interior(&Vector::basis(7, i)).expect("3-form"))
        .collect();
    let mut out = vec![vec![S::zero(); 7]; 7];
    for i in 0..7 {
        let right = &c[i] ^ gamma;
        for j in i..7 {
            let v = scalar_part(&s.star(&(&c[j] ^ &right)));
            out[i][j] = v.clone();
            out[j][i] = v;
        }
    }
    out
}

fn two_form_tensor<S: Coefficient>(beta: &KForm<S>) -> Tensor2<S> {
    let mut out = vec![vec![S::zero(); 7]; 7];
    for (idx, c) in beta.terms() {
        let mut axes = idx.axes();
        let (i, j) = (axes.next().expect("2-form"), axes.next().expect("2-form"));
        out[i][j] = c.clone();
        out[j][i] = -c.clone();
    }
    out
}

/// `T = τ0/4 g − τ1♯⌟φ − ½τ2 − ¼ j(τ3)`, with 2-forms read as
/// antisymmetric tensors `β(e_i, e_j)`.
pub fn full_torsion<S: Coefficient>(tf: &TorsionForms<S>, s: &G2Structure<S>) -> Result<Tensor2<S>, G2Error> {
    let g = s.metric().entries();
    let x = s.metric().sharp(&tf.tau1)?;
    let t1 = two_form_tensor(&s.phi().interior(&x)?);
    let t2 = two_form_tensor(&tf.tau2);
    let j3 = j_operator(&tf.tau3, s);
    let quarter = S::from_ratio(1, 4);
    let half = S::from_ratio(1, 2);
    let t0 = tf.tau0.clone() * quarter.clone();
    let mut out = vec![vec![S::zero(); 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            out[i][j] = t0.clone() * g[i][j].clone()
                - t1[i][j].clone()
                - half.clone() * t2[i][j].clone()
                - quarter.clone() * j3[i][j].clone();
        }
    }
    Ok(out)
}

/// `|T|² = T_ij T_kl g^ik g^jl`.
pub fn tensor_norm_sq<S: Coefficient>(t: &Tensor2<S>, s: &G2Structure<S>) -> S {
    let inv = s.metric().inverse();
    let n = t.len();
    // Raise both indices: U = g⁻¹ T g⁻¹.
    let mut raised = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for l in 0..n {
            let mut acc = S::zero();
            for k in 0..n {
                if inv[i][k].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !inv[j][l].is_zero() && !t[k][j].is_zero() {
                        acc = acc + inv[i][k].clone() * t[k][j].clone() * inv[j][l].clone();
                    }
                }
            }
            raised[i][l] = acc;
        }
    }
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            acc = acc + t[i][j].clone() * raised[i][j].clone();
        }
    }
    acc
}

/// `Δψ = d∗dφ` for a coclosed structure, with `d` supplied by the model.
pub fn hodge_laplacian_psi<S: Coefficient>(
    s: &G2Structure<S>,
    d: impl Fn(&KForm<S>) -> KForm<S>,
    tol: f64,
) -> Result<KForm<S>, G2Error> {
    let dpsi = d(s.psi());
    let residual = dpsi.max_magnitude();
    if residual > tol {
        return Err(G2Error::NotCoclosed(residual));
    }
    Ok(d(&s.star(&d(s.phi()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::{fiber_form, kahler_form6, lift, re_upsilon6};
    use crate::scalar::{Poly, Symbol};

    #[test]
    fn flat_structure_is_torsion_free() {
        let s = G2Structure::<f64>::standard();
        let tf = extract_torsion(&s, &KForm::zero(7, 4), &KForm::zero(7, 5)).unwrap();
        assert!(tf.is_zero());
        let t = full_torsion(&tf, &s).unwrap();
        assert!(t.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn j_of_phi_is_six_g() {
        let s = G2Structure::<f64>::standard();
        let j = j_operator(s.phi(), &s);
        for (i, row) in j.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == k { 6.0 } else { 0.0 });
            }
        }
        assert!(j_operator(&KForm::zero(7, 3), &s).iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn inconsistent_input_is_rejected() {
        // dφ = dx¹²³⁴ (a pure fiber-free 4-form) with dψ = 0 forces a τ3 with
        // an Ω³₇ part, which the torsion equations forbid.
        let s = G2Structure::<f64>::standard();
        let dphi = KForm::basis(7, &[0, 1, 2, 3]).unwrap();
        assert!(matches!(
            extract_torsion(&s, &dphi, &KForm::zero(7, 5)),
            Err(G2Error::Reconstruction(_))
        ));
    }

    #[test]
    fn laplacian_requires_coclosed_input() {
        let s = G2Structure::<f64>::standard();
        let bad = |f: &KForm<f64>| {
            if f.degree() == 4 {
                KForm::basis(7, &[0, 1, 2, 3, 4]).unwrap()
            } else {
                KForm::zero(7, f.degree() + 1)
            }
        };
        assert!(matches!(hodge_laplacian_psi(&s, bad, 1e-10), Err(G2Error::NotCoclosed(_))));
    }

    #[test]
    fn ansatz_full_torsion() {
        let a = Poly::symbol(Symbol::FiberScale);
        let b = Poly::symbol(Symbol::BaseScale);
        let w = lift(&kahler_form6::<Poly>());
        let phi = lift(&re_upsilon6::<Poly>()).scale(&b.powi(3).unwrap())
            + (fiber_form::<Poly>() ^ &w).scale(&(a.clone() * b.powi(2).unwrap()));
        let s = G2Structure::from_phi(phi).unwrap();
        // dη = ω, transverse forms closed.
        let dphi = (&w ^ &w).scale(&(a.clone() * b.powi(2).unwrap()));
        let tf = extract_torsion(&s, &dphi, &KForm::zero(7, 5)).unwrap();
        assert_eq!(tf.tau0, Poly::monomial(6, 7, &[(Symbol::FiberScale, 1), (Symbol::BaseScale, -2)]));
        let t = full_torsion(&tf, &s).unwrap();
        let norm = tensor_norm_sq(&t, &s);
        assert_eq!(norm, Poly::monomial(15, 4, &[(Symbol::FiberScale, 2), (Symbol::BaseScale, -4)]));
    }
}
