use std::fmt;

use super::ExteriorError;

/// Largest supported dimension (indices are stored as a bitmask).
pub const MAX_DIM: usize = 16;

/// Strictly increasing set of 0-based axis indices, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(u16);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    pub fn from_bits(bits: u16) -> Self {
        MultiIndex(bits)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    /// Index set of the given (distinct) axes; order is irrelevant.
    pub fn new(dim: usize, axes: &[usize]) -> Result<Self, ExteriorError> {
        let mut bits = 0u16;
        for &i in axes {
            if i >= dim || i >= MAX_DIM || bits & (1 << i) != 0 {
                return Err(ExteriorError::InvalidIndex(axes.to_vec(), dim));
            }
            bits |= 1 << i;
        }
        Ok(MultiIndex(bits))
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(1 << i)
    }

    /// The full index set `{0, …, dim−1}`.
    pub fn full(dim: usize) -> Self {
        MultiIndex(((1u32 << dim) - 1) as u16)
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn max_axis(self) -> Option<usize> {
        (self.0 != 0).then(|| 15 - self.0.leading_zeros() as usize)
    }

    pub fn axes(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_DIM).filter(move |i| bits & (1 << i) != 0)
    }

    pub fn complement(self, dim: usize) -> Self {
        MultiIndex(Self::full(dim).0 & !self.0)
    }

    pub fn without(self, i: usize) -> Self {
        MultiIndex(self.0 & !(1 << i))
    }

    pub fn union(self, other: MultiIndex) -> Self {
        MultiIndex(self.0 | other.0)
    }

    pub fn is_disjoint(self, other: MultiIndex) -> bool {
        self.0 & other.0 == 0
    }

    /// Number of axes in `self` below `i`.
    pub fn position(self, i: usize) -> usize {
        (self.0 & ((1u32 << i) - 1) as u16).count_ones() as usize
    }

    /// Sign of `e^self ∧ e^other` relative to `e^{self ∪ other}`, or `None`
    /// when the sets overlap.
    pub fn wedge_sign(self, other: MultiIndex) -> Option<i8> {
        if !self.is_disjoint(other) {
            return None;
        }
        let mut inversions = 0u32;
        for j in other.axes() {
            inversions += (self.0 >> (j + 1)).count_ones();
        }
        Some(if inversions % 2 == 0 { 1 } else { -1 })
    }

    /// All `k`-subsets of `{0, …, dim−1}` in increasing bitmask order.
    pub fn subsets(dim: usize, k: usize) -> Vec<MultiIndex> {
        (0u32..(1u32 << dim))
            .filter(|b| b.count_ones() as usize == k)
            .map(|b| MultiIndex(b as u16))
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return f.write_str("1");
        }
        f.write_str("dx")?;
        let many = self.max_axis().unwrap_or(0) >= 9;
        for (n, i) in self.axes().enumerate() {
            if many && n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_sign_counts_inversions() {
        let a = MultiIndex::new(7, &[1]).unwrap();
        let b = MultiIndex::new(7, &[0]).unwrap();
        assert_eq!(a.wedge_sign(b), Some(-1));
        assert_eq!(b.wedge_sign(a), Some(1));
        assert_eq!(a.wedge_sign(a), None);
        let c = MultiIndex::new(7, &[0, 2]).unwrap();
        assert_eq!(a.wedge_sign(c), Some(-1));
    }

    #[test]
    fn subsets_are_binomial() {
        assert_eq!(MultiIndex::subsets(7, 3).len(), 35);
        assert_eq!(MultiIndex::subsets(6, 0), vec![MultiIndex::EMPTY]);
    }

    #[test]
    fn rejects_repeats_and_out_of_range() {
        assert!(MultiIndex::new(3, &[0, 0]).is_err());
        assert!(MultiIndex::new(3, &[3]).is_err());
    }
}
