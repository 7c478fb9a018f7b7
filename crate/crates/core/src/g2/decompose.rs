use super::{G2Error, G2Structure};
use crate::exterior::{KForm, Vector};
use crate::linalg;
use crate::scalar::Coefficient;

/// `β ↦ ∗(φ∧β)`, with eigenvalue 2 on Ω²₇ and −1 on Ω²₁₄.
pub fn type_operator2<S: Coefficient>(beta: &KForm<S>, s: &G2Structure<S>) -> KForm<S> {
    s.star(&(s.phi() ^ beta))
}

/// Split a 2-form into its Ω²₇ and Ω²₁₄ parts.
pub fn decompose2<S: Coefficient>(
    beta: &KForm<S>,
    s: &G2Structure<S>,
) -> Result<(KForm<S>, KForm<S>), G2Error> {
    if beta.dim() != 7 || beta.degree() != 2 {
        return Err(G2Error::Shape { dim: beta.dim(), degree: beta.degree() });
    }
    let t = type_operator2(beta, s);
    let third = S::from_ratio(1, 3);
    let b7 = (&t + beta).scale(&third);
    let b14 = (beta.scale(&S::from_int(2)) - &t).scale(&third);
    Ok((b7, b14))
}

/// `{e_i ⌟ ψ}`, spanning Ω³₇.
pub fn omega3_7_basis<S: Coefficient>(s: &G2Structure<S>) -> Vec<KForm<S>> {
    (0..7)
        .map(|i| s.psi().interior(&Vector::basis(7, i)).expect("4-form"))
        .collect()
}

/// Coefficients of the orthogonal projection of `target` onto span(`basis`).
pub(crate) fn gram_coefficients<S: Coefficient>(
    target: &KForm<S>,
    basis: &[KForm<S>],
    s: &G2Structure<S>,
) -> Result<Vec<S>, G2Error> {
    let n = basis.len();
    let mut gram = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = s.inner(&basis[i], &basis[j])?;
            gram[i][j] = v.clone();
            gram[j][i] = v;
        }
    }
    let rhs = basis
        .iter()
        .map(|b| s.inner(target, b))
        .collect::<Result<Vec<_>, _>>()?;
    linalg::solve(&gram, &rhs).ok_or(G2Error::Unrepresentable("Gram system"))
}

pub(crate) fn combine<S: Coefficient>(coeffs: &[S], basis: &[KForm<S>]) -> KForm<S> {
    let first = &basis[0];
    coeffs
        .iter()
        .zip(basis)
        .fold(KForm::zero(first.dim(), first.degree()), |acc, (c, b)| acc + b.scale(c))
}

/// Split a 3-form into its Ω³₁, Ω³₇ and Ω³₂₇ parts.
pub fn decompose3<S: Coefficient>(
    gamma: &KForm<S>,
    s: &G2Structure<S>,
) -> Result<(KForm<S>, KForm<S>, KForm<S>), G2Error> {
    if gamma.dim() != 7 || gamma.degree() != 3 {
        return Err(G2Error::Shape { dim: gamma.dim(), degree: gamma.degree() });
    }
    // |φ|² = 7
    let c1 = s.inner(gamma, s.phi())? * S::from_ratio(1, 7);
    let g1 = s.phi().scale(&c1);
    let basis = omega3_7_basis(s);
    let c7 = gram_coefficients(gamma, &basis, s)?;
    let g7 = combine(&c7, &basis);
    let g27 = gamma - &g1 - &g7;
    Ok((g1, g7, g27))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(axes: &[usize]) -> KForm<f64> {
        KForm::basis(7, axes).unwrap()
    }

    #[test]
    fn contraction_of_phi_is_type_seven() {
        let s = G2Structure::<f64>::standard();
        let x = Vector::new(vec![0.3, -1.0, 0.2, 0.5, 0.0, 1.1, -0.4]);
        let beta = s.phi().interior(&x).unwrap();
        let (b7, b14) = decompose2(&beta, &s).unwrap();
        assert!(b14.max_magnitude() < 1e-14);
        assert!((b7 - &beta).max_magnitude() < 1e-14);
    }

    #[test]
    fn fourteen_dimensional_part() {
        let s = G2Structure::<f64>::standard();
        // Anti-self-dual with respect to the fiber's Kähler pairing.
        let beta = e(&[1, 2]) - e(&[3, 4]);
        assert!((type_operator2(&beta, &s) + &beta).max_magnitude() < 1e-14);
        let (b7, _) = decompose2(&beta, &s).unwrap();
        assert!(b7.max_magnitude() < 1e-14);
    }

    #[test]
    fn three_form_split_of_phi_and_contractions() {
        let s = G2Structure::<f64>::standard();
        let (g1, g7, g27) = decompose3(s.phi(), &s).unwrap();
        assert!((g1 - s.phi()).max_magnitude() < 1e-14);
        assert!(g7.max_magnitude() < 1e-14 && g27.max_magnitude() < 1e-14);
        let x = s.psi().interior(&Vector::basis(7, 3)).unwrap();
        let (g1, g7, g27) = decompose3(&x, &s).unwrap();
        assert!(g1.max_magnitude() < 1e-14 && g27.max_magnitude() < 1e-14);
        assert!((g7 - &x).max_magnitude() < 1e-14);
    }
}
