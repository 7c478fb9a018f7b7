use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::{ExteriorError, KForm, MultiIndex, Vector, MAX_DIM};
use crate::linalg::{self, Matrix};
use crate::scalar::Coefficient;

/// Constant symmetric metric with a fixed orientation.
///
/// The inverse and `√det` are computed once; raising the indices of a
/// `k`-form uses the `k`-th compound matrix of the inverse, built lazily.
#[derive(Clone, Debug)]
pub struct Metric<S> {
    entries: Matrix<S>,
    inverse: Matrix<S>,
    sqrt_det: S,
    orientation: i8,
    diagonal: bool,
    compounds: Arc<Vec<OnceLock<Compound<S>>>>,
}

/// Minors of the inverse metric, keyed by (row set, column set).
type Compound<S> = BTreeMap<MultiIndex, Vec<(MultiIndex, S)>>;

impl<S: Coefficient> Metric<S> {
    pub fn new(entries: Matrix<S>, orientation: i8) -> Result<Self, ExteriorError> {
        let n = entries.len();
        if n > MAX_DIM {
            return Err(ExteriorError::UnsupportedDimension(n));
        }
        if let Some(row) = entries.iter().find(|r| r.len() != n) {
            return Err(ExteriorError::DimensionMismatch(row.len(), n));
        }
        let scale = entries
            .iter()
            .flat_map(|r| r.iter().map(Coefficient::magnitude))
            .fold(0.0, f64::max);
        let mut diagonal = true;
        for i in 0..n {
            for j in 0..i {
                let asym = entries[i][j].clone() - entries[j][i].clone();
                if !asym.is_negligible(scale) {
                    return Err(ExteriorError::NotSymmetric);
                }
                if !entries[i][j].is_negligible(scale) {
                    diagonal = false;
                }
            }
        }
        if linalg::leading_minors_positive(&entries) == Some(false) {
            return Err(ExteriorError::NotPositiveDefinite);
        }
        let (det, inverse) = if diagonal {
            let det = entries
                .iter()
                .enumerate()
                .fold(S::one(), |acc, (i, r)| acc * r[i].clone());
            let mut inv = vec![vec![S::zero(); n]; n];
            for i in 0..n {
                inv[i][i] = entries[i][i].try_inv().ok_or(ExteriorError::SingularMetric)?;
            }
            (det, inv)
        } else {
            let det = linalg::determinant(&entries);
            let inv = linalg::inverse(&entries).ok_or(ExteriorError::SingularMetric)?;
            (det, inv)
        };
        if det.is_negligible(scale.powi(n as i32)) {
            return Err(ExteriorError::SingularMetric);
        }
        let sqrt_det = det.try_root(2).ok_or(ExteriorError::Unrepresentable("√det g"))?;
        Ok(Metric {
            entries,
            inverse,
            sqrt_det,
            orientation: if orientation < 0 { -1 } else { 1 },
            diagonal,
            compounds: Arc::new((0..=n).map(|_| OnceLock::new()).collect()),
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| S::one()).collect()).expect("identity metric")
    }

    pub fn diagonal(entries: Vec<S>) -> Result<Self, ExteriorError> {
        let n = entries.len();
        let mut m = vec![vec![S::zero(); n]; n];
        for (i, v) in entries.into_iter().enumerate() {
            m[i][i] = v;
        }
        Self::new(m, 1)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    pub fn inverse(&self) -> &Matrix<S> {
        &self.inverse
    }

    pub fn sqrt_det(&self) -> &S {
        &self.sqrt_det
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn with_orientation(mut self, orientation: i8) -> Self {
        self.orientation = if orientation < 0 { -1 } else { 1 };
        self
    }

    /// Riemannian volume form `±√det g · dx¹ ∧ … ∧ dxⁿ`.
    pub fn volume_form(&self) -> KForm<S> {
        let n = self.dim();
        let v = self.oriented(self.sqrt_det.clone());
        KForm::from_terms(n, n, [(MultiIndex::full(n), v)]).expect("full index")
    }

    fn oriented(&self, v: S) -> S {
        if self.orientation < 0 {
            -v
        } else {
            v
        }
    }

    /// `g(X, Y)`.
    pub fn apply(&self, x: &Vector<S>, y: &Vector<S>) -> S {
        let mut acc = S::zero();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, gij) in row.iter().enumerate() {
                if !gij.is_zero() {
                    acc = acc + gij.clone() * x.components[i].clone() * y.components[j].clone();
                }
            }
        }
        acc
    }

    /// Metric dual 1-form `X♭ = g(X, ·)`.
    pub fn flat(&self, x: &Vector<S>) -> KForm<S> {
        let n = self.dim();
        let terms = (0..n).map(|i| {
            let v = (0..n).fold(S::zero(), |acc, j| {
                acc + self.entries[i][j].clone() * x.components[j].clone()
            });
            (MultiIndex::single(i), v)
        });
        KForm::from_terms(n, 1, terms).expect("1-form")
    }

    /// Metric dual vector `α♯` of a 1-form.
    pub fn sharp(&self, alpha: &KForm<S>) -> Result<Vector<S>, ExteriorError> {
        let n = self.dim();
        self.check(alpha)?;
        if alpha.degree() != 1 {
            return Err(ExteriorError::DegreeMismatch(alpha.degree(), 1));
        }
        let comps = (0..n)
            .map(|i| {
                alpha.terms().fold(S::zero(), |acc, (idx, c)| {
                    let j = idx.axes().next().expect("degree 1");
                    acc + self.inverse[i][j].clone() * c.clone()
                })
            })
            .collect();
        Ok(Vector::new(comps))
    }

    fn check(&self, a: &KForm<S>) -> Result<(), ExteriorError> {
        if a.dim() != self.dim() {
            return Err(ExteriorError::DimensionMismatch(a.dim(), self.dim()));
        }
        Ok(())
    }

    fn compound(&self, k: usize) -> &Compound<S> {
        self.compounds[k].get_or_init(|| {
            let n = self.dim();
            let subsets = MultiIndex::subsets(n, k);
            let mut out = BTreeMap::new();
            for &i in &subsets {
                let rows: Vec<usize> = i.axes().collect();
                let mut entries = Vec::new();
                for &j in &subsets {
                    let cols: Vec<usize> = j.axes().collect();
                    let minor: Matrix<S> = rows
                        .iter()
                        .map(|&r| cols.iter().map(|&c| self.inverse[r][c].clone()).collect())
                        .collect();
                    let d = linalg::determinant(&minor);
                    if !d.is_zero() {
                        entries.push((j, d));
                    }
                }
                out.insert(i, entries);
            }
            out
        })
    }

    /// Components `α^I` of a form with all indices raised.
    fn raise(&self, a: &KForm<S>) -> BTreeMap<MultiIndex, S> {
        let mut out = BTreeMap::new();
        if self.diagonal {
            for (idx, c) in a.terms() {
                let f = idx.axes().fold(c.clone(), |acc, i| acc * self.inverse[i][i].clone());
                out.insert(idx, f);
            }
            return out;
        }
        let compound = self.compound(a.degree());
        for (i, row) in compound {
            let mut acc = S::zero();
            for (j, m) in row {
                let c = a.coeff(*j);
                if !c.is_zero() {
                    acc = acc + m.clone() * c;
                }
            }
            if !acc.is_zero() {
                out.insert(*i, acc);
            }
        }
        out
    }

    /// Hodge star, characterised by `a ∧ ∗b = ⟨a, b⟩ vol`.
    pub fn hodge_star(&self, a: &KForm<S>) -> Result<KForm<S>, ExteriorError> {
        self.check(a)?;
        let n = self.dim();
        if a.degree() > n {
            return Ok(KForm::zero(n, 0));
        }
        let mut out = KForm::zero(n, n - a.degree());
        let vol = self.oriented(self.sqrt_det.clone());
        for (i, c) in self.raise(a) {
            let j = i.complement(n);
            let sign = i.wedge_sign(j).expect("disjoint");
            let v = vol.clone() * c;
            out.accumulate(j, if sign > 0 { v } else { -v });
        }
        Ok(out)
    }

    /// Induced inner product of two forms of equal degree.
    pub fn inner(&self, a: &KForm<S>, b: &KForm<S>) -> Result<S, ExteriorError> {
        self.check(a)?;
        self.check(b)?;
        if a.degree() != b.degree() {
            return Err(ExteriorError::DegreeMismatch(a.degree(), b.degree()));
        }
        let raised = self.raise(b);
        Ok(a.terms().fold(S::zero(), |acc, (i, c)| match raised.get(&i) {
            Some(r) => acc + c.clone() * r.clone(),
            None => acc,
        }))
    }

    pub fn norm_sq(&self, a: &KForm<S>) -> Result<S, ExteriorError> {
        self.inner(a, a)
    }
}

/// Hodge star of `a` with respect to `g`.
pub fn hodge_star<S: Coefficient>(a: &KForm<S>, g: &Metric<S>) -> Result<KForm<S>, ExteriorError> {
    g.hodge_star(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega6() -> KForm<f64> {
        KForm::basis(6, &[0, 1]).unwrap()
            + KForm::basis(6, &[2, 3]).unwrap()
            + KForm::basis(6, &[4, 5]).unwrap()
    }

    #[test]
    fn star_of_one_and_volume() {
        let g = Metric::<f64>::euclidean(7);
        let one = KForm::scalar(7, 1.0);
        assert_eq!(g.hodge_star(&one).unwrap(), g.volume_form());
        assert_eq!(g.hodge_star(&g.volume_form()).unwrap(), one);
    }

    #[test]
    fn kahler_form_star() {
        let g = Metric::<f64>::euclidean(6);
        let w = omega6();
        let w2 = &w ^ &w;
        assert_eq!(g.hodge_star(&w).unwrap(), w2.scale(&0.5));
        // |ω|² vs brute force ω ∧ ∗ω
        let top = &w ^ g.hodge_star(&w).unwrap();
        assert_eq!(top.coeff(MultiIndex::full(6)), 3.0);
        assert_eq!(g.inner(&w, &w).unwrap(), 3.0);
    }

    #[test]
    fn non_diagonal_metric_star_is_an_isometry() {
        let m = vec![
            vec![2.0, 0.3, 0.0],
            vec![0.3, 1.0, 0.1],
            vec![0.0, 0.1, 1.5],
        ];
        let g = Metric::new(m, 1).unwrap();
        let a = KForm::basis(3, &[0]).unwrap() + KForm::monomial(3, &[2], 0.7).unwrap();
        let b = KForm::monomial(3, &[1], -1.2).unwrap() + KForm::basis(3, &[2]).unwrap();
        let lhs = &a ^ g.hodge_star(&b).unwrap();
        let rhs = g.volume_form().scale(&g.inner(&a, &b).unwrap());
        assert!((lhs - rhs).max_magnitude() < 1e-14);
    }

    #[test]
    fn rejects_bad_metrics() {
        assert_eq!(
            Metric::new(vec![vec![1.0, 2.0], vec![0.0, 1.0]], 1).err(),
            Some(ExteriorError::NotSymmetric)
        );
        assert_eq!(
            Metric::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], 1).err(),
            Some(ExteriorError::NotPositiveDefinite)
        );
    }
}
