use super::G2Error;
use crate::exterior::{KForm, Metric, MultiIndex, Vector};
use crate::linalg::Matrix;
use crate::scalar::Coefficient;

/// Lower bound on `det B` below which a 3-form is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Standard Kähler form `dx¹² + dx³⁴ + dx⁵⁶` on `ℝ⁶` (0-based axes).
pub fn kahler_form6<S: Coefficient>() -> KForm<S> {
    let e = |a, b| KForm::basis(6, &[a, b]).expect("basis");
    e(0, 1) + e(2, 3) + e(4, 5)
}

/// Real part of `(dx¹ + i dx²)∧(dx³ + i dx⁴)∧(dx⁵ + i dx⁶)`.
pub fn re_upsilon6<S: Coefficient>() -> KForm<S> {
    let e = |a, b, c| KForm::basis(6, &[a, b, c]).expect("basis");
    e(0, 2, 4) - e(0, 3, 5) - e(1, 2, 5) - e(1, 3, 4)
}

/// Imaginary part of `(dx¹ + i dx²)∧(dx³ + i dx⁴)∧(dx⁵ + i dx⁶)`.
pub fn im_upsilon6<S: Coefficient>() -> KForm<S> {
    let e = |a, b, c| KForm::basis(6, &[a, b, c]).expect("basis");
    e(0, 2, 5) + e(0, 3, 4) + e(1, 2, 4) - e(1, 3, 5)
}

/// The fiber coordinate 1-form `dx⁰` of the 7-dimensional model.
pub fn fiber_form<S: Coefficient>() -> KForm<S> {
    KForm::basis(7, &[0]).expect("basis")
}

/// Lift a form on the transverse `ℝ⁶` to axes `1..=6` of `ℝ⁷`.
pub fn lift<S: Coefficient>(f: &KForm<S>) -> KForm<S> {
    f.embed(7, 1).expect("6 → 7 embedding")
}

/// Flat positive 3-form `θ∧ω + ReΥ` with `θ = dx⁰`, i.e.
/// `dx⁰¹² + dx⁰³⁴ + dx⁰⁵⁶ + dx¹³⁵ − dx¹⁴⁶ − dx²³⁶ − dx²⁴⁵`.
pub fn standard_phi<S: Coefficient>() -> KForm<S> {
    (fiber_form::<S>() ^ lift(&kahler_form6())) + lift(&re_upsilon6())
}

/// Positive 3-form with its metric, volume form and dual 4-form `ψ = ∗φ`.
#[derive(Clone, Debug)]
pub struct G2Structure<S> {
    phi: KForm<S>,
    metric: Metric<S>,
    vol: KForm<S>,
    psi: KForm<S>,
}

impl<S: Coefficient> G2Structure<S> {
    pub fn from_phi(phi: KForm<S>) -> Result<Self, G2Error> {
        let (metric, vol) = metric_from_phi(&phi)?;
        let psi = metric.hodge_star(&phi)?;
        Ok(G2Structure { phi, metric, vol, psi })
    }

    pub fn standard() -> Self {
        Self::from_phi(standard_phi()).expect("flat structure")
    }

    pub fn phi(&self) -> &KForm<S> {
        &self.phi
    }

    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    pub fn vol(&self) -> &KForm<S> {
        &self.vol
    }

    pub fn psi(&self) -> &KForm<S> {
        &self.psi
    }

    pub fn star(&self, a: &KForm<S>) -> KForm<S> {
        self.metric.hodge_star(a).expect("7-form input")
    }

    pub fn inner(&self, a: &KForm<S>, b: &KForm<S>) -> Result<S, G2Error> {
        Ok(self.metric.inner(a, b)?)
    }

    /// Largest deviation from `(e_i⌟φ)∧(e_j⌟φ)∧φ = 6 g_ij vol` over all pairs.
    pub fn defining_relation_residual(&self) -> f64 {
        let b = bilinear(&self.phi);
        let top = MultiIndex::full(7);
        let vol = self.vol.coeff(top);
        let mut worst: f64 = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                let expected = S::from_int(6) * self.metric.entries()[i][j].clone() * vol.clone();
                worst = worst.max((b[i][j].clone() - expected).magnitude());
            }
        }
        worst
    }
}

/// `B_ij` with `(e_i⌟φ)∧(e_j⌟φ)∧φ = B_ij dx⁰¹²³⁴⁵⁶`.
fn bilinear<S: Coefficient>(phi: &KForm<S>) -> Matrix<S> {
    let contractions: Vec<KForm<S>> = (0..7)
        .map(|i| phi.interior(&Vector::basis(7, i)).expect("3-form"))
        .collect();
    let top = MultiIndex::full(7);
    let mut b = vec![vec![S::zero(); 7]; 7];
    for i in 0..7 {
        let left = &contractions[i] ^ phi;
        for j in i..7 {
            let v = (&contractions[j] ^ &left).coeff(top);
            b[i][j] = v.clone();
            b[j][i] = v;
        }
    }
    b
}

/// Metric and volume form determined by a positive 3-form.
///
/// `B = 6·g·√det g` gives `det B = 6⁷ (√det g)⁹`, which fixes the scale.
pub fn metric_from_phi<S: Coefficient>(phi: &KForm<S>) -> Result<(Metric<S>, KForm<S>), G2Error> {
    if phi.dim() != 7 || phi.degree() != 3 {
        return Err(G2Error::Shape { dim: phi.dim(), degree: phi.degree() });
    }
    let b = bilinear(phi);
    let det_b = if (0..7).all(|i| (0..7).all(|j| i == j || b[i][j].is_zero())) {
        (0..7).fold(S::one(), |acc, i| acc * b[i][i].clone())
    } else {
        crate::linalg::determinant(&b)
    };
    if det_b.is_positive() == Some(false) || det_b.magnitude() <= DEGENERACY_THRESHOLD {
        return Err(G2Error::Degenerate);
    }
    let six7 = S::from_int(6).pow(7);
    let ratio = det_b * six7.try_inv().expect("nonzero");
    let sqrt_det = ratio.try_root(9).ok_or(G2Error::Unrepresentable("ninth root of det B"))?;
    let factor = (S::from_int(6) * sqrt_det.clone())
        .try_inv()
        .ok_or(G2Error::Unrepresentable("inverse of √det g"))?;
    let g: Matrix<S> = b
        .iter()
        .map(|row| row.iter().map(|v| v.clone() * factor.clone()).collect())
        .collect();
    let metric = Metric::new(g, 1).map_err(|e| match e {
        crate::exterior::ExteriorError::NotPositiveDefinite => G2Error::Degenerate,
        other => G2Error::Exterior(other),
    })?;
    let vol = KForm::from_terms(7, 7, [(MultiIndex::full(7), sqrt_det)])?;
    Ok((metric, vol))
}
