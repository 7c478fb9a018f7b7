use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, BitXor, Neg, Sub};

use super::{ExteriorError, MultiIndex, MAX_DIM};
use crate::scalar::Coefficient;

/// Homogeneous `k`-form on `ℝⁿ` with coefficients in `S`, stored sparsely.
///
/// A degree above `n` is allowed only for the zero form produced by a wedge
/// that overflows the dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct KForm<S> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, S>,
}

/// Constant vector on `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<S> {
    pub components: Vec<S>,
}

impl<S: Coefficient> Vector<S> {
    pub fn new(components: Vec<S>) -> Self {
        Vector { components }
    }

    pub fn zero(dim: usize) -> Self {
        Vector { components: vec![S::zero(); dim] }
    }

    /// Coordinate vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.components[i] = S::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn map<T: Coefficient>(&self, f: impl Fn(&S) -> T) -> Vector<T> {
        Vector { components: self.components.iter().map(f).collect() }
    }
}

impl<S: Coefficient> KForm<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        KForm { dim, degree, terms: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, value: S) -> Self {
        Self::from_index(dim, MultiIndex::EMPTY, value)
    }

    fn from_index(dim: usize, index: MultiIndex, value: S) -> Self {
        let mut f = Self::zero(dim, index.degree());
        f.accumulate(index, value);
        f
    }

    /// `coeff · dx^{i₁} ∧ … ∧ dx^{i_k}` for distinct axes in any order.
    pub fn monomial(dim: usize, axes: &[usize], coeff: S) -> Result<Self, ExteriorError> {
        if dim > MAX_DIM {
            return Err(ExteriorError::UnsupportedDimension(dim));
        }
        let index = MultiIndex::new(dim, axes)?;
        let mut sorted = axes.to_vec();
        let mut swaps = 0;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    swaps += 1;
                }
            }
        }
        let c = if swaps % 2 == 0 { coeff } else { -coeff };
        Ok(Self::from_index(dim, index, c))
    }

    /// `dx^{i₁} ∧ … ∧ dx^{i_k}`.
    pub fn basis(dim: usize, axes: &[usize]) -> Result<Self, ExteriorError> {
        Self::monomial(dim, axes, S::one())
    }

    /// Build from `(index, coefficient)` pairs; repeated indices accumulate.
    pub fn from_terms(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (MultiIndex, S)>,
    ) -> Result<Self, ExteriorError> {
        if dim > MAX_DIM {
            return Err(ExteriorError::UnsupportedDimension(dim));
        }
        let mut f = Self::zero(dim, degree);
        for (i, c) in terms {
            if i.degree() != degree {
                return Err(ExteriorError::DegreeMismatch(i.degree(), degree));
            }
            if i.max_axis().is_some_and(|m| m >= dim) {
                return Err(ExteriorError::InvalidIndex(i.axes().collect(), dim));
            }
            f.accumulate(i, c);
        }
        Ok(f)
    }

    /// Add `value` to the coefficient of `index` (no validation).
    pub(crate) fn accumulate(&mut self, index: MultiIndex, value: S) {
        if value.is_zero() {
            return;
        }
        match self.terms.remove(&index) {
            Some(old) => {
                let new = old + value;
                if !new.is_zero() {
                    self.terms.insert(index, new);
                }
            }
            None => {
                self.terms.insert(index, value);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &S)> {
        self.terms.iter().map(|(i, c)| (*i, c))
    }

    pub fn coeff(&self, index: MultiIndex) -> S {
        self.terms.get(&index).cloned().unwrap_or_else(S::zero)
    }

    /// Coefficient of `dx^{axes}` (axes in any order, sign-adjusted).
    pub fn component(&self, axes: &[usize]) -> S {
        match Self::monomial(self.dim, axes, S::one()) {
            Ok(m) => match m.terms.iter().next() {
                Some((i, s)) => self.coeff(*i) * s.clone(),
                None => S::zero(),
            },
            Err(_) => S::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(Coefficient::magnitude).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map_coeffs(|c| c.clone() * s.clone())
    }

    pub fn map_coeffs<T: Coefficient>(&self, f: impl Fn(&S) -> T) -> KForm<T> {
        let mut out = KForm::zero(self.dim, self.degree);
        for (i, c) in &self.terms {
            out.accumulate(*i, f(c));
        }
        out
    }

    fn check_shape(&self, other: &Self) -> Result<(), ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch(self.degree, other.degree));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.accumulate(*i, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.try_add(&-other)
    }

    /// Exterior product; zero when the degrees overflow the dimension.
    pub fn wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch(self.dim, other.dim));
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        if out.degree > self.dim {
            return Ok(out);
        }
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if let Some(sign) = i.wedge_sign(*j) {
                    let v = a.clone() * b.clone();
                    out.accumulate(i.union(*j), if sign > 0 { v } else { -v });
                }
            }
        }
        Ok(out)
    }

    /// Interior product `X ⌟ self`.
    pub fn interior(&self, x: &Vector<S>) -> Result<Self, ExteriorError> {
        if x.dim() != self.dim {
            return Err(ExteriorError::DimensionMismatch(x.dim(), self.dim));
        }
        if self.degree == 0 {
            return Err(ExteriorError::ZeroDegree);
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (idx, c) in &self.terms {
            for i in idx.axes() {
                let xi = &x.components[i];
                if xi.is_zero() {
                    continue;
                }
                let v = xi.clone() * c.clone();
                let v = if idx.position(i) % 2 == 0 { v } else { -v };
                out.accumulate(idx.without(i), v);
            }
        }
        Ok(out)
    }

    /// Interior product with the coordinate vector `e_i`.
    pub fn contract_axis(&self, i: usize) -> Result<Self, ExteriorError> {
        self.interior(&Vector::basis(self.dim, i))
    }

    /// Extend by zero to a larger ambient space, shifting axes by `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Result<Self, ExteriorError> {
        if self.dim + offset > dim || dim > MAX_DIM {
            return Err(ExteriorError::DimensionMismatch(self.dim + offset, dim));
        }
        let mut out = Self::zero(dim, self.degree);
        for (i, c) in &self.terms {
            out.accumulate(MultiIndex::from_bits(i.bits() << offset), c.clone());
        }
        Ok(out)
    }
}

impl<S: Coefficient> Neg for &KForm<S> {
    type Output = KForm<S>;
    fn neg(self) -> KForm<S> {
        self.map_coeffs(|c| -c.clone())
    }
}

impl<S: Coefficient> Neg for KForm<S> {
    type Output = KForm<S>;
    fn neg(self) -> KForm<S> {
        -&self
    }
}

// Operator forms panic on shape mismatch, which is a programming error in
// formula code; the `try_*`/`wedge` methods report it instead.
macro_rules! binop {
    ($tr:ident, $method:ident, $call:ident) => {
        impl<S: Coefficient> $tr<&KForm<S>> for &KForm<S> {
            type Output = KForm<S>;
            fn $method(self, rhs: &KForm<S>) -> KForm<S> {
                self.$call(rhs).unwrap_or_else(|e| panic!("{}: {e}", stringify!($method)))
            }
        }
        impl<S: Coefficient> $tr<KForm<S>> for KForm<S> {
            type Output = KForm<S>;
            fn $method(self, rhs: KForm<S>) -> KForm<S> {
                (&self).$method(&rhs)
            }
        }
        impl<S: Coefficient> $tr<&KForm<S>> for KForm<S> {
            type Output = KForm<S>;
            fn $method(self, rhs: &KForm<S>) -> KForm<S> {
                (&self).$method(rhs)
            }
        }
        impl<S: Coefficient> $tr<KForm<S>> for &KForm<S> {
            type Output = KForm<S>;
            fn $method(self, rhs: KForm<S>) -> KForm<S> {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(BitXor, bitxor, wedge);

impl<S: Coefficient> fmt::Display for KForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (i, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}) {i}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(axes: &[usize]) -> KForm<f64> {
        KForm::basis(7, axes).unwrap()
    }

    #[test]
    fn basis_wedge() {
        assert_eq!(e(&[0]) ^ e(&[1]), e(&[0, 1]));
        assert_eq!(e(&[1]) ^ e(&[0]), -e(&[0, 1]));
        assert_eq!(e(&[1, 0]), -e(&[0, 1]));
    }

    #[test]
    fn odd_forms_square_to_zero() {
        let phi = e(&[0, 1, 2]) + e(&[0, 3, 4]) + e(&[1, 3, 5]);
        assert!((&phi ^ &phi).is_zero());
    }

    #[test]
    fn overflow_is_zero() {
        let top = KForm::<f64>::basis(3, &[0, 1, 2]).unwrap();
        let one = KForm::<f64>::basis(3, &[0]).unwrap();
        assert!((top ^ one).is_zero());
    }

    #[test]
    fn interior_on_basis() {
        let f = e(&[0, 1]);
        assert_eq!(f.contract_axis(0).unwrap(), e(&[1]));
        assert_eq!(f.contract_axis(1).unwrap(), -e(&[0]));
        assert!(f.contract_axis(2).unwrap().is_zero());
        assert_eq!(KForm::scalar(7, 1.0).contract_axis(0), Err(ExteriorError::ZeroDegree));
    }

    #[test]
    fn mismatched_dimensions_are_errors() {
        let a = KForm::<f64>::basis(6, &[0]).unwrap();
        assert!(a.wedge(&e(&[1])).is_err());
        assert!(a.try_add(&KForm::basis(6, &[0, 1]).unwrap()).is_err());
    }

    #[test]
    fn embed_shifts_axes() {
        let b = KForm::<f64>::basis(6, &[0, 1]).unwrap();
        assert_eq!(b.embed(7, 1).unwrap(), e(&[1, 2]));
    }
}
