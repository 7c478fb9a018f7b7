//! Exact algebra of invariant forms on a contact Calabi–Yau 7-manifold (or a
//! Calabi–Yau 3-fold times a line) with constant `|Υ|`.
//!
//! Generators: the fiber 1-form `η`, the transverse Kähler form `ω` and
//! `ρ = ReΥ`, `σ = ImΥ`, subject to `η² = 0`, `ρω = σω = 0`, `ρ² = σ² = 0`,
//! `ρσ = (2/3)ω³`, `ω⁴ = 0`. Coefficients are [`Poly`]s in the formal
//! parameters, so every identity is checked by exact equality.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::exterior::KForm;
use crate::g2::{fiber_form, im_upsilon6, kahler_form6, lift, re_upsilon6};
use crate::scalar::{Coefficient, Poly, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("element is not homogeneous in degree")]
    NotHomogeneous,
    #[error("parameter {0} is not invertible")]
    NotInvertible(String),
    #[error("structure is not coclosed: d∗φ = {0}")]
    NotCoclosed(String),
}

/// Whether the fiber 1-form is a contact form (`dη = ω`) or closed (`dθ = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FiberConvention {
    Contact,
    Product,
}

/// Normalized monomial `η^δ ω^p ρ^q σ^r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub eta: bool,
    pub omega: u8,
    pub rho: bool,
    pub sigma: bool,
}

impl Generator {
    pub const ONE: Generator = Generator { eta: false, omega: 0, rho: false, sigma: false };
    pub const ETA: Generator = Generator { eta: true, ..Self::ONE };
    pub const OMEGA: Generator = Generator { omega: 1, ..Self::ONE };
    pub const RHO: Generator = Generator { rho: true, ..Self::ONE };
    pub const SIGMA: Generator = Generator { sigma: true, ..Self::ONE };

    pub fn degree(self) -> usize {
        self.eta as usize + 2 * self.omega as usize + 3 * (self.rho as usize + self.sigma as usize)
    }

    fn basic(self) -> Generator {
        Generator { eta: false, ..self }
    }

    /// Product of two monomials as `(coefficient, monomial)`, or `None` if
    /// it vanishes by the relations.
    fn mul(self, other: Generator) -> Option<(Poly, Generator)> {
        if self.eta && other.eta {
            return None;
        }
        let mut negative = false;
        // η of the right factor moves past the odd ρ/σ of the left one.
        if other.eta && (self.rho as u8 + self.sigma as u8) % 2 == 1 {
            negative = !negative;
        }
        if self.sigma && other.rho {
            negative = !negative;
        }
        if (self.rho && other.rho) || (self.sigma && other.sigma) {
            return None;
        }
        let rho = self.rho || other.rho;
        let sigma = self.sigma || other.sigma;
        let mut omega = self.omega + other.omega;
        if (rho || sigma) && omega > 0 {
            return None;
        }
        let mut coeff = Poly::int(1);
        let (rho, sigma) = if rho && sigma {
            coeff = Poly::ratio(2, 3);
            omega += 3;
            (false, false)
        } else {
            (rho, sigma)
        };
        if omega > 3 {
            return None;
        }
        let g = Generator { eta: self.eta || other.eta, omega, rho, sigma };
        Some((if negative { -coeff } else { coeff }, g))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.eta {
            parts.push("η".to_string());
        }
        match self.omega {
            0 => {}
            1 => parts.push("ω".into()),
            p => parts.push(format!("ω^{p}")),
        }
        if self.rho {
            parts.push("ρ".into());
        }
        if self.sigma {
            parts.push("σ".into());
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("∧"))
        }
    }
}

/// Element of the invariant-form algebra with symbolic coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgebraElement {
    terms: BTreeMap<Generator, Poly>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: Poly, g: Generator) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(g, coeff);
        }
        AlgebraElement { terms }
    }

    pub fn scalar(c: Poly) -> Self {
        Self::term(c, Generator::ONE)
    }

    pub fn one() -> Self {
        Self::scalar(Poly::int(1))
    }

    pub fn eta() -> Self {
        Self::term(Poly::int(1), Generator::ETA)
    }

    pub fn omega() -> Self {
        Self::term(Poly::int(1), Generator::OMEGA)
    }

    pub fn rho() -> Self {
        Self::term(Poly::int(1), Generator::RHO)
    }

    pub fn sigma() -> Self {
        Self::term(Poly::int(1), Generator::SIGMA)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Generator, &Poly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, g: Generator) -> Poly {
        self.terms.get(&g).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common degree of all terms; `None` for mixed degrees. The zero
    /// element has every degree and reports `Some(0)`.
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(|g| g.degree());
        let first = it.next().unwrap_or(0);
        it.all(|d| d == first).then_some(first)
    }

    fn accumulate(&mut self, g: Generator, c: Poly) {
        if c.is_zero() {
            return;
        }
        let new = self.terms.remove(&g).map_or(c.clone(), |old| old + c);
        if !new.is_zero() {
            self.terms.insert(g, new);
        }
    }

    pub fn scale(&self, c: &Poly) -> Self {
        self.map_coeffs(|x| x.clone() * c.clone())
    }

    fn map_coeffs(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        let mut out = Self::zero();
        for (g, c) in &self.terms {
            out.accumulate(*g, f(c));
        }
        out
    }

    /// Coefficient-wise formal time derivative (`a ↦ ȧ`, `b ↦ ḃ`).
    pub fn time_derivative(&self) -> Self {
        self.map_coeffs(Poly::time_derivative)
    }

    /// Replace a symbol in every coefficient.
    pub fn substitute(&self, s: Symbol, value: &Poly) -> Option<Self> {
        let mut out = Self::zero();
        for (g, c) in &self.terms {
            out.accumulate(*g, c.substitute(s, value)?);
        }
        Some(out)
    }

    /// Realize as a coordinate form on `ℝ⁷` (fiber axis 0, unit-norm `Υ`).
    pub fn to_kform(&self) -> KForm<Poly> {
        let eta = fiber_form::<Poly>();
        let w = lift(&kahler_form6::<Poly>());
        let rho = lift(&re_upsilon6::<Poly>());
        let sigma = lift(&im_upsilon6::<Poly>());
        let mut out: Option<KForm<Poly>> = None;
        for (g, c) in &self.terms {
            let mut f = KForm::scalar(7, c.clone());
            if g.eta {
                f = &eta ^ &f;
            }
            for _ in 0..g.omega {
                f = &f ^ &w;
            }
            if g.rho {
                f = &f ^ &rho;
            }
            if g.sigma {
                f = &f ^ &sigma;
            }
            out = Some(match out {
                Some(acc) => acc + f,
                None => f,
            });
        }
        out.unwrap_or_else(|| KForm::zero(7, 0))
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(mut self, rhs: AlgebraElement) -> AlgebraElement {
        for (g, c) in rhs.terms {
            self.accumulate(g, c);
        }
        self
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.map_coeffs(|c| -c.clone())
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        self + (-rhs)
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (g1, c1) in &self.terms {
            for (g2, c2) in &rhs.terms {
                if let Some((k, g)) = g1.mul(*g2) {
                    out.accumulate(g, k * c1.clone() * c2.clone());
                }
            }
        }
        out
    }
}

impl Mul for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        &self * &rhs
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(g, c)| format!("({c}) {g}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Wedge product with the algebra relations applied.
pub fn mul(x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    x * y
}

/// Exterior derivative; all coefficients are constant on the manifold.
pub fn d(x: &AlgebraElement, conv: FiberConvention) -> AlgebraElement {
    match conv {
        FiberConvention::Product => AlgebraElement::zero(),
        FiberConvention::Contact => {
            let mut out = AlgebraElement::zero();
            for (g, c) in &x.terms {
                if g.eta {
                    // d(η∧β) = ω∧β for closed basic β.
                    let rest = AlgebraElement::term(c.clone(), g.basic());
                    out = out + &AlgebraElement::omega() * &rest;
                }
            }
            out
        }
    }
}

/// Transverse Hodge star for the unit metric: `1 ↦ ω³/6`, `ω ↦ ω²/2`,
/// `ω² ↦ 2ω`, `ω³ ↦ 6`, `ρ ↦ σ`, `σ ↦ −ρ`.
fn star_basic(g: Generator) -> (Poly, Generator) {
    match (g.omega, g.rho, g.sigma) {
        (0, false, false) => (Poly::ratio(1, 6), Generator { omega: 3, ..Generator::ONE }),
        (1, false, false) => (Poly::ratio(1, 2), Generator { omega: 2, ..Generator::ONE }),
        (2, false, false) => (Poly::int(2), Generator::OMEGA),
        (3, false, false) => (Poly::int(6), Generator::ONE),
        (0, true, false) => (Poly::int(1), Generator::SIGMA),
        (0, false, true) => (Poly::int(-1), Generator::RHO),
        _ => unreachable!("normalized generators only"),
    }
}

/// Hodge star of `g = a²η² + b²g_D` with orientation `η∧ω³/6`:
/// `∗α = (−1)^k a b^{6−2k} η∧∗_Bα` and `∗(η∧α) = a⁻¹ b^{6−2k} ∗_Bα` for
/// basic `α` of degree `k`.
pub fn star_param(x: &AlgebraElement, a: &Poly, b: &Poly) -> Result<AlgebraElement, AlgebraError> {
    x.degree().ok_or(AlgebraError::NotHomogeneous)?;
    let a_inv = a.try_inv().ok_or_else(|| AlgebraError::NotInvertible(a.to_string()))?;
    let b_inv = b.try_inv().ok_or_else(|| AlgebraError::NotInvertible(b.to_string()))?;
    let b_pow = |e: i32| -> Poly {
        if e >= 0 {
            b.pow(e as u32)
        } else {
            b_inv.pow((-e) as u32)
        }
    };
    let mut out = AlgebraElement::zero();
    for (g, c) in &x.terms {
        let basic = g.basic();
        let k = basic.degree() as i32;
        let (s, sg) = star_basic(basic);
        let scale = b_pow(6 - 2 * k) * s * c.clone();
        if g.eta {
            out.accumulate(sg, a_inv.clone() * scale);
        } else {
            let sign = if k % 2 == 0 { Poly::int(1) } else { Poly::int(-1) };
            let term = AlgebraElement::term(sign * a.clone() * scale, sg);
            out = out + &AlgebraElement::eta() * &term;
        }
    }
    Ok(out)
}

/// `Δψ = d∗dφ` for a coclosed `φ`.
pub fn laplacian_coclosed(
    phi: &AlgebraElement,
    a: &Poly,
    b: &Poly,
    conv: FiberConvention,
) -> Result<AlgebraElement, AlgebraError> {
    let dpsi = d(&star_param(phi, a, b)?, conv);
    if !dpsi.is_zero() {
        return Err(AlgebraError::NotCoclosed(dpsi.to_string()));
    }
    Ok(d(&star_param(&d(phi, conv), a, b)?, conv))
}

/// `d((A − (7/2)τ0)φ)` with constant `τ0`.
pub fn modified_term(phi: &AlgebraElement, tau0: &Poly, modification: &Poly, conv: FiberConvention) -> AlgebraElement {
    let factor = modification.clone() - Poly::ratio(7, 2) * tau0.clone();
    d(phi, conv).scale(&factor)
}

/// `τ0 = (1/7)∗(φ∧dφ)`.
pub fn torsion_tau0(phi: &AlgebraElement, a: &Poly, b: &Poly, conv: FiberConvention) -> Result<Poly, AlgebraError> {
    let top = phi * &d(phi, conv);
    Ok(star_param(&top, a, b)?.coeff(Generator::ONE) * Poly::ratio(1, 7))
}

/// Result of an exact identity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub equal: bool,
    pub residual: AlgebraElement,
}

pub fn verify_identity(lhs: &AlgebraElement, rhs: &AlgebraElement) -> IdentityCheck {
    let residual = lhs.clone() - rhs.clone();
    IdentityCheck { equal: residual.is_zero(), residual }
}

/// `φ = b³ρ + a b² η∧ω`.
pub fn ansatz_phi(a: &Poly, b: &Poly) -> AlgebraElement {
    AlgebraElement::rho().scale(&b.pow(3))
        + (&AlgebraElement::eta() * &AlgebraElement::omega()).scale(&(a.clone() * b.pow(2)))
}

/// Formal symbols as polynomials.
pub fn sym(s: Symbol) -> Poly {
    Poly::symbol(s)
}

/// Residual `∂ψ/∂t − Δψ − d((A − (7/2)τ0)φ)` of the modified coflow for the
/// Ansatz with formal time-dependent `a, b`.
pub fn ansatz_coflow_residual() -> Result<AlgebraElement, AlgebraError> {
    let (a, b) = (sym(Symbol::FiberScale), sym(Symbol::BaseScale));
    let conv = FiberConvention::Contact;
    let phi = ansatz_phi(&a, &b);
    let psi = star_param(&phi, &a, &b)?;
    let lap = laplacian_coclosed(&phi, &a, &b, conv)?;
    let tau0 = torsion_tau0(&phi, &a, &b, conv)?;
    let extra = modified_term(&phi, &tau0, &sym(Symbol::Modification), conv);
    Ok(psi.time_derivative() - lap - extra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Metric;

    fn a() -> Poly {
        sym(Symbol::FiberScale)
    }
    fn b() -> Poly {
        sym(Symbol::BaseScale)
    }

    fn all_generators() -> Vec<Generator> {
        let mut out = Vec::new();
        for eta in [false, true] {
            for omega in 0..=3u8 {
                out.push(Generator { eta, omega, rho: false, sigma: false });
            }
            out.push(Generator { eta, rho: true, ..Generator::ONE });
            out.push(Generator { eta, sigma: true, ..Generator::ONE });
        }
        out
    }

    #[test]
    fn relations() {
        let (eta, w, rho, sigma) =
            (AlgebraElement::eta(), AlgebraElement::omega(), AlgebraElement::rho(), AlgebraElement::sigma());
        assert!((&eta * &eta).is_zero());
        assert!((&rho * &w).is_zero());
        assert_eq!(&rho * &sigma, (&(&w * &w) * &w).scale(&Poly::ratio(2, 3)));
        assert_eq!(&sigma * &rho, -(&rho * &sigma));
        assert_eq!(&eta * &w, &w * &eta);
        assert_eq!(&eta * &rho, -(&rho * &eta));
        let w3 = &(&w * &w) * &w;
        assert!((&(&eta * &w) * &w3).is_zero());
    }

    #[test]
    fn products_match_coordinate_forms() {
        for g1 in all_generators() {
            for g2 in all_generators() {
                let x = AlgebraElement::term(Poly::int(1), g1);
                let y = AlgebraElement::term(Poly::int(1), g2);
                let lhs = (&x * &y).to_kform();
                let rhs = x.to_kform() ^ y.to_kform();
                assert!(lhs.is_zero() && rhs.is_zero() || lhs == rhs, "{g1} * {g2}");
            }
        }
    }

    #[test]
    fn star_matches_coordinate_hodge_star() {
        let (a, b) = (a(), b());
        let mut diag = vec![a.pow(2)];
        diag.extend((0..6).map(|_| b.pow(2)));
        let g = Metric::diagonal(diag).unwrap();
        for gen in all_generators() {
            let x = AlgebraElement::term(Poly::int(1), gen);
            let lhs = star_param(&x, &a, &b).unwrap().to_kform();
            let rhs = g.hodge_star(&x.to_kform()).unwrap();
            assert_eq!(lhs, rhs, "∗{gen}");
        }
    }

    #[test]
    fn star_squares_to_sign() {
        for gen in all_generators() {
            let x = AlgebraElement::term(Poly::int(1), gen);
            let k = gen.degree();
            let twice = star_param(&star_param(&x, &a(), &b()).unwrap(), &a(), &b()).unwrap();
            let expected = if (k * (7 - k)) % 2 == 0 { x } else { -x };
            assert_eq!(twice, expected);
        }
    }

    #[test]
    fn d_squares_to_zero() {
        for conv in [FiberConvention::Contact, FiberConvention::Product] {
            for gen in all_generators() {
                let x = AlgebraElement::term(a(), gen);
                assert!(d(&d(&x, conv), conv).is_zero());
            }
        }
    }

    #[test]
    fn mixed_degrees_are_rejected() {
        let x = AlgebraElement::eta() + AlgebraElement::omega();
        assert_eq!(star_param(&x, &a(), &b()), Err(AlgebraError::NotHomogeneous));
    }

    #[test]
    fn product_convention_is_harmonic() {
        let phi = ansatz_phi(&Poly::int(1), &Poly::int(1));
        let lap = laplacian_coclosed(&phi, &Poly::int(1), &Poly::int(1), FiberConvention::Product).unwrap();
        assert!(lap.is_zero());
    }

    #[test]
    fn coflow_residual_vanishes_on_ode_solutions() {
        // a = ε b⁻³ and ḃ = ½ ε b⁻⁹ (A b⁵ − ε).
        let eps = sym(Symbol::Epsilon);
        let big_a = sym(Symbol::Modification);
        let r = ansatz_coflow_residual().unwrap();
        let b_dot = Poly::ratio(1, 2) * eps.clone() * b().powi(-9).unwrap()
            * (big_a * b().pow(5) - eps.clone());
        let a_dot = Poly::int(-3) * eps.clone() * b().powi(-4).unwrap() * b_dot.clone();
        let r = r
            .substitute(Symbol::FiberRate, &a_dot)
            .and_then(|r| r.substitute(Symbol::BaseRate, &b_dot))
            .and_then(|r| r.substitute(Symbol::FiberScale, &(eps * b().powi(-3).unwrap())))
            .unwrap();
        assert!(r.is_zero(), "{r}");
    }
}
