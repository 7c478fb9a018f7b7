//! Coefficient rings for forms: exact rationals, Laurent polynomials in formal
//! symbols, and floating point values.
//!
//! Forms are generic over [`Coefficient`], so combining an exact form with a
//! floating one is rejected by the type checker instead of being coerced.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Rational = BigRational;

/// Relative threshold under which a floating coefficient is treated as zero
/// during pivoting.
pub const FLOAT_NEGLIGIBLE: f64 = 1e-12;

/// Arithmetic required of form coefficients.
pub trait Coefficient:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse, if it exists in this representation.
    fn try_inv(&self) -> Option<Self>;
    /// Principal `n`-th root, if it exists in this representation.
    fn try_root(&self, n: u32) -> Option<Self>;
    /// `Some(true)` for values known to be strictly positive, `Some(false)` for
    /// values known not to be, `None` when undecidable (symbolic sums).
    fn is_positive(&self) -> Option<bool>;
    /// Size used for pivot selection.
    fn magnitude(&self) -> f64;
    /// Whether the value should be treated as zero relative to `scale`.
    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn try_inv(&self) -> Option<Self> {
        (*self != 0.0 && self.is_finite()).then(|| 1.0 / self)
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        match n {
            0 => None,
            1 => Some(*self),
            2 => (*self >= 0.0).then(|| self.sqrt()),
            3 => Some(self.cbrt()),
            _ if *self >= 0.0 => Some(self.powf(1.0 / n as f64)),
            _ if n % 2 == 1 => Some(-(-self).powf(1.0 / n as f64)),
            _ => None,
        }
    }
    fn is_positive(&self) -> Option<bool> {
        Some(*self > 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_NEGLIGIBLE * scale.max(1.0)
    }
    fn pow(&self, exp: u32) -> Self {
        self.powi(exp as i32)
    }
}

fn rational_root(x: &Rational, n: u32) -> Option<Rational> {
    if n == 0 {
        return None;
    }
    if x.is_negative() && n % 2 == 0 {
        return None;
    }
    let num = x.numer().nth_root(n);
    let den = x.denom().nth_root(n);
    let candidate = Rational::new(num, den);
    (num_traits::pow(candidate.clone(), n as usize) == *x).then_some(candidate)
}

impl Coefficient for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn try_inv(&self) -> Option<Self> {
        (!Zero::is_zero(self)).then(|| self.recip())
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        rational_root(self, n)
    }
    fn is_positive(&self) -> Option<bool> {
        Some(Signed::is_positive(self))
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Formal symbols carried by symbolic coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// Fiber scale `a`.
    FiberScale,
    /// Transverse scale `b`.
    BaseScale,
    /// Initial fiber radius `ε`.
    Epsilon,
    /// Modification constant `A`.
    Modification,
    /// Constant norm `|Υ|` of the transverse volume form.
    UpsilonNorm,
    /// Time derivative of `a`.
    FiberRate,
    /// Time derivative of `b`.
    BaseRate,
    /// Generic positive constant `c`.
    Scale,
}

impl Symbol {
    /// Symbols representing quantities that are positive by construction.
    pub fn is_positive(self) -> bool {
        matches!(
            self,
            Symbol::FiberScale
                | Symbol::BaseScale
                | Symbol::Epsilon
                | Symbol::UpsilonNorm
                | Symbol::Scale
        )
    }

    fn time_derivative(self) -> Option<Symbol> {
        match self {
            Symbol::FiberScale => Some(Symbol::FiberRate),
            Symbol::BaseScale => Some(Symbol::BaseRate),
            _ => None,
        }
    }
}

impl Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symbol::FiberScale => "a",
            Symbol::BaseScale => "b",
            Symbol::Epsilon => "ε",
            Symbol::Modification => "A",
            Symbol::UpsilonNorm => "|Υ|",
            Symbol::FiberRate => "ȧ",
            Symbol::BaseRate => "ḃ",
            Symbol::Scale => "c",
        };
        f.write_str(s)
    }
}

/// Product of symbols raised to nonzero integer powers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(BTreeMap<Symbol, i32>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn symbol(s: Symbol, exp: i32) -> Self {
        let mut m = BTreeMap::new();
        if exp != 0 {
            m.insert(s, exp);
        }
        Monomial(m)
    }

    pub fn exponent(&self, s: Symbol) -> i32 {
        self.0.get(&s).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn powers(&self) -> impl Iterator<Item = (Symbol, i32)> + '_ {
        self.0.iter().map(|(s, e)| (*s, *e))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (s, e) in &other.0 {
            let v = out.entry(*s).or_insert(0);
            *v += e;
            if *v == 0 {
                out.remove(s);
            }
        }
        Monomial(out)
    }

    fn scaled(&self, k: i32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(s, e)| (*s, e * k)).collect())
    }

    fn with_exponent(&self, s: Symbol, exp: i32) -> Monomial {
        let mut out = self.0.clone();
        if exp == 0 {
            out.remove(&s);
        } else {
            out.insert(s, exp);
        }
        Monomial(out)
    }

    fn all_positive(&self) -> bool {
        self.0.keys().all(|s| s.is_positive())
    }
}

impl Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, e) in &self.0 {
            if !first {
                f.write_str("·")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Laurent polynomial with rational coefficients in the formal [`Symbol`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn constant(q: Rational) -> Self {
        Self::term(q, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(<Rational as Coefficient>::from_ratio(num, den))
    }

    pub fn term(q: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&q) {
            terms.insert(m, q);
        }
        Poly { terms }
    }

    pub fn symbol(s: Symbol) -> Self {
        Self::term(One::one(), Monomial::symbol(s, 1))
    }

    /// `c · s₁^e₁ · s₂^e₂ ⋯`
    pub fn monomial(num: i64, den: i64, powers: &[(Symbol, i32)]) -> Self {
        let m = powers
            .iter()
            .fold(Monomial::one(), |acc, (s, e)| acc.mul(&Monomial::symbol(*s, *e)));
        Self::term(<Rational as Coefficient>::from_ratio(num, den), m)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single term of a one-term polynomial.
    pub fn as_single_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Constant value when the polynomial has no symbols.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Zero::zero()),
            1 => {
                let (m, q) = self.terms.iter().next()?;
                m.is_one().then(|| q.clone())
            }
            _ => None,
        }
    }

    /// Integer power; negative exponents need a single-term polynomial.
    pub fn powi(&self, exp: i32) -> Option<Self> {
        if exp >= 0 {
            return Some(Coefficient::pow(self, exp as u32));
        }
        let inv = self.try_inv()?;
        Some(Coefficient::pow(&inv, (-exp) as u32))
    }

    /// Formal time derivative, with `a ↦ ȧ` and `b ↦ ḃ`; every other symbol
    /// is constant in time.
    pub fn time_derivative(&self) -> Poly {
        let mut out = Poly::default();
        for (m, q) in &self.terms {
            for (s, e) in m.powers() {
                if let Some(ds) = s.time_derivative() {
                    let reduced = m.with_exponent(s, e - 1);
                    let dm = reduced.mul(&Monomial::symbol(ds, 1));
                    let coeff = q.clone() * Rational::from_integer(BigInt::from(e));
                    out = out + Poly::term(coeff, dm);
                }
            }
        }
        out
    }

    /// Replace `s` by `value` wherever it occurs. Negative powers of `s`
    /// require `value` to be invertible.
    pub fn substitute(&self, s: Symbol, value: &Poly) -> Option<Poly> {
        let mut out = Poly::default();
        for (m, q) in &self.terms {
            let e = m.exponent(s);
            let rest = Poly::term(q.clone(), m.with_exponent(s, 0));
            out = out + rest * value.powi(e)?;
        }
        Some(out)
    }

    /// Numeric evaluation with the given symbol values.
    pub fn evaluate(&self, value: impl Fn(Symbol) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, q)| {
                let c = q.to_f64().unwrap_or(f64::NAN);
                m.powers().fold(c, |acc, (s, e)| acc * value(s).powi(e))
            })
            .sum()
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, q) in rhs.terms {
            let entry = self.terms.entry(m.clone()).or_insert_with(Zero::zero);
            *entry += q;
            if Zero::is_zero(entry) {
                self.terms.remove(&m);
            }
        }
        self
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for q in self.terms.values_mut() {
            *q = -q.clone();
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, q1) in &self.terms {
            for (m2, q2) in &rhs.terms {
                out = out + Poly::term(q1.clone() * q2.clone(), m1.mul(m2));
            }
        }
        out
    }
}

impl Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            let abs = q.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}·{m}")?;
            }
        }
        Ok(())
    }
}

impl Coefficient for Poly {
    fn zero() -> Self {
        Poly::default()
    }
    fn one() -> Self {
        Poly::int(1)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Poly::ratio(num, den)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn try_inv(&self) -> Option<Self> {
        let (m, q) = self.as_single_term()?;
        Some(Poly::term(q.recip(), m.scaled(-1)))
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        if self.terms.is_empty() {
            return Some(Poly::default());
        }
        let (m, q) = self.as_single_term()?;
        let root = rational_root(q, n)?;
        let mut exps = BTreeMap::new();
        for (s, e) in m.powers() {
            if e % n as i32 != 0 {
                return None;
            }
            // Even roots of symbols of unknown sign are not principal.
            if n % 2 == 0 && !s.is_positive() && (e / n as i32) % 2 != 0 {
                return None;
            }
            exps.insert(s, e / n as i32);
        }
        Some(Poly::term(root, Monomial(exps)))
    }
    fn is_positive(&self) -> Option<bool> {
        if self.terms.is_empty() {
            return Some(false);
        }
        let (m, q) = self.as_single_term()?;
        if m.all_positive() {
            Some(Signed::is_positive(q))
        } else {
            None
        }
    }
    fn magnitude(&self) -> f64 {
        // Only single terms are invertible, so only they are usable pivots.
        match self.terms.len() {
            0 => 0.0,
            1 => 1.0,
            _ => 0.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Poly {
        Poly::symbol(Symbol::FiberScale)
    }
    fn b() -> Poly {
        Poly::symbol(Symbol::BaseScale)
    }

    #[test]
    fn poly_arithmetic_cancels() {
        let x = a() * b() - b() * a();
        assert!(Coefficient::is_zero(&x));
        let y = (a() + b()) * (a() - b());
        assert_eq!(y, a() * a() - b() * b());
    }

    #[test]
    fn poly_inverse_only_for_single_terms() {
        let m = Poly::monomial(6, 7, &[(Symbol::FiberScale, 1), (Symbol::BaseScale, -2)]);
        let inv = m.try_inv().unwrap();
        assert_eq!(m * inv, Poly::int(1));
        assert!((a() + b()).try_inv().is_none());
    }

    #[test]
    fn poly_roots() {
        let m = Poly::monomial(4, 9, &[(Symbol::FiberScale, 2), (Symbol::BaseScale, 12)]);
        let r = m.try_root(2).unwrap();
        assert_eq!(r, Poly::monomial(2, 3, &[(Symbol::FiberScale, 1), (Symbol::BaseScale, 6)]));
        assert!(Poly::monomial(2, 1, &[]).try_root(2).is_none());
        let sym_a = Poly::monomial(1, 1, &[(Symbol::Modification, 2)]);
        assert!(sym_a.try_root(2).is_none());
    }

    #[test]
    fn time_derivative_is_leibniz() {
        // d/dt (a b^3) = ȧ b^3 + 3 a b^2 ḃ
        let p = a() * b().powi(3).unwrap();
        let expected = Poly::symbol(Symbol::FiberRate) * b().powi(3).unwrap()
            + Poly::int(3) * a() * b().powi(2).unwrap() * Poly::symbol(Symbol::BaseRate);
        assert_eq!(p.time_derivative(), expected);
    }

    #[test]
    fn rational_roots() {
        let x = <Rational as Coefficient>::from_ratio(8, 27);
        assert_eq!(x.try_root(3).unwrap(), <Rational as Coefficient>::from_ratio(2, 3));
        assert!(<Rational as Coefficient>::from_ratio(2, 1).try_root(2).is_none());
    }

    #[test]
    fn substitute_and_evaluate() {
        // a = ε b^-3 turns a b^3 into ε.
        let eps_b = Poly::monomial(1, 1, &[(Symbol::Epsilon, 1), (Symbol::BaseScale, -3)]);
        let p = (a() * b().powi(3).unwrap()).substitute(Symbol::FiberScale, &eps_b).unwrap();
        assert_eq!(p, Poly::symbol(Symbol::Epsilon));
        let v = (a() + b()).evaluate(|s| if s == Symbol::FiberScale { 2.0 } else { 3.0 });
        assert_eq!(v, 5.0);
    }
}
