use std::collections::BTreeMap;

use rayon::prelude::*;

use super::field::{Field, Torus};
use super::TorusError;
use crate::algebra::FiberConvention;
use crate::exterior::{KForm, Metric, MultiIndex, Vector};
use crate::scalar::Coefficient;

/// Form on the 7-dimensional model with grid-function coefficients.
///
/// Axis 0 is the fiber coordinate θ and axes 1..=6 the torus base. A term
/// without axis 0 is basic; a term `c·dθ∧dx^J` is the fiber part. All
/// coefficients are basic functions (no θ dependence).
pub type TorusForm = KForm<Field>;

/// Vector field on the model; component 0 is along `∂_θ`.
pub type TorusVector = Vector<Field>;

/// The three Kähler-form pairs of the base as 7D axes.
pub const BASE_PAIRS: [(usize, usize); 3] = [(1, 2), (3, 4), (5, 6)];

/// Spectral exterior calculus on the torus model.
#[derive(Clone, Debug)]
pub struct Calculus {
    torus: Torus,
    conv: FiberConvention,
}

impl Calculus {
    pub fn new(torus: Torus, conv: FiberConvention) -> Self {
        Calculus { torus, conv }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn convention(&self) -> FiberConvention {
        self.conv
    }

    pub fn points(&self) -> usize {
        self.torus.points()
    }

    /// `∂f/∂x^axis` for a 7D axis; the fiber derivative vanishes.
    pub fn partial(&self, f: &Field, axis: usize) -> Field {
        if axis == 0 {
            Field::Const(0.0)
        } else {
            self.torus.derivative(f, axis - 1)
        }
    }

    pub fn d_function(&self, f: &Field) -> TorusForm {
        self.d(&KForm::scalar(7, f.clone()))
    }

    /// Exterior derivative with `dθ = ω₀` (contact) or `dθ = 0` (product).
    pub fn d(&self, a: &TorusForm) -> TorusForm {
        let mut out = KForm::zero(7, a.degree() + 1);
        if out.degree() > 7 {
            return out;
        }
        for (idx, c) in a.terms() {
            for axis in 1..7 {
                if idx.contains(axis) {
                    continue;
                }
                let dc = self.partial(c, axis);
                if dc.is_zero() {
                    continue;
                }
                let e = MultiIndex::single(axis);
                let sign = e.wedge_sign(idx).expect("disjoint");
                out.accumulate(e.union(idx), if sign > 0 { dc } else { -dc });
            }
            if idx.contains(0) && self.conv == FiberConvention::Contact {
                // d(c dθ∧dx^J) ∋ c ω₀∧dx^J
                let rest = idx.without(0);
                for (p, q) in BASE_PAIRS {
                    let pair = MultiIndex::single(p).union(MultiIndex::single(q));
                    if let Some(sign) = pair.wedge_sign(rest) {
                        let v = c.clone();
                        out.accumulate(pair.union(rest), if sign > 0 { v } else { -v });
                    }
                }
            }
        }
        out
    }

    /// `d^c f = ½ Σ (∂_x f dy − ∂_y f dx)` over the complex pairs `z = x + iy`.
    pub fn dc(&self, f: &Field) -> TorusForm {
        let mut out = KForm::zero(7, 1);
        for (x, y) in BASE_PAIRS {
            let fx = self.partial(f, x) * Field::Const(0.5);
            let fy = self.partial(f, y) * Field::Const(-0.5);
            out.accumulate(MultiIndex::single(y), fx);
            out.accumulate(MultiIndex::single(x), fy);
        }
        out
    }

    /// `dd^c f`, a closed real (1,1)-form.
    pub fn ddc(&self, f: &Field) -> TorusForm {
        self.d(&self.dc(f))
    }

    /// `𝓛_X α = d(X⌟α) + X⌟dα`.
    pub fn lie_derivative(&self, x: &TorusVector, a: &TorusForm) -> TorusForm {
        let inner = if a.degree() == 0 { KForm::zero(7, 0) } else { self.d(&interior(x, a)) };
        let outer = self.d(a);
        let outer = if outer.degree() == 0 { KForm::zero(7, a.degree()) } else { interior(x, &outer) };
        inner + outer
    }

    /// `g(∇f, ·) = df` for a pointwise metric.
    pub fn gradient(&self, f: &Field, metrics: &[Metric<f64>]) -> Result<TorusVector, TorusError> {
        let df = self.d_function(f);
        let per_point: Vec<Vec<f64>> = (0..self.points())
            .into_par_iter()
            .map(|p| {
                let m = &metrics[p];
                let form = at_point(&df, p);
                let form = if m.dim() == 7 { form } else { restrict_to_base(&form) };
                m.sharp(&form).map(|v| v.components)
            })
            .collect::<Result<_, _>>()?;
        let dim = metrics.first().map_or(7, Metric::dim);
        let offset = 7 - dim;
        let mut comps = vec![Field::Const(0.0); 7];
        for (i, c) in comps.iter_mut().enumerate().skip(offset) {
            *c = Field::from_vec(per_point.iter().map(|v| v[i - offset]).collect());
        }
        Ok(Vector::new(comps))
    }
}

pub(crate) fn interior(x: &TorusVector, a: &TorusForm) -> TorusForm {
    a.interior(x).expect("7D interior product")
}

/// Coefficients of a 7D form at grid point `p`.
pub fn at_point(a: &TorusForm, p: usize) -> KForm<f64> {
    a.map_coeffs(|c| c.value(p))
}

/// Drop to the 6D base (axes 1..=6 → 0..=5); the form must be basic.
pub fn restrict_to_base(a: &KForm<f64>) -> KForm<f64> {
    let terms = a.terms().map(|(i, c)| {
        debug_assert!(!i.contains(0), "restricting a non-basic form");
        (MultiIndex::from_bits(i.bits() >> 1), *c)
    });
    KForm::from_terms(6, a.degree(), terms).expect("basic form")
}

/// Reassemble per-point forms of a common degree into a field form.
pub fn assemble(degree: usize, per_point: &[KForm<f64>]) -> TorusForm {
    let n = per_point.len();
    let mut cols: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
    for (p, f) in per_point.iter().enumerate() {
        debug_assert_eq!(f.degree(), degree);
        for (i, c) in f.terms() {
            cols.entry(i).or_insert_with(|| vec![0.0; n])[p] = *c;
        }
    }
    let dim = per_point.first().map_or(7, KForm::dim);
    KForm::from_terms(dim, degree, cols.into_iter().map(|(i, v)| (i, Field::from_vec(v)))).expect("assembled form")
}

/// Largest coefficient magnitude over all grid points.
pub fn max_residual(a: &TorusForm) -> f64 {
    a.terms().map(|(_, c)| c.max_abs()).fold(0.0, f64::max)
}

/// Mean over grid points of the largest coefficient magnitude.
pub fn mean_residual(a: &TorusForm, points: usize) -> f64 {
    if a.is_empty() || points == 0 {
        return 0.0;
    }
    let mut worst = vec![0.0f64; points];
    for (_, c) in a.terms() {
        for (p, w) in worst.iter_mut().enumerate() {
            *w = w.max(c.value(p).abs());
        }
    }
    worst.iter().sum::<f64>() / points as f64
}

/// Lift a constant form on the 6D base to axes 1..=6.
pub fn constant_basic(a: &KForm<f64>) -> TorusForm {
    a.embed(7, 1).expect("6 → 7").map_coeffs(|c| Field::Const(*c))
}

/// `dθ` as a field form.
pub fn fiber_coframe() -> TorusForm {
    KForm::basis(7, &[0]).expect("basis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::g2::kahler_form6;

    fn calc(conv: FiberConvention) -> Calculus {
        Calculus::new(Torus::new(16, &[0, 2, 3]).unwrap(), conv)
    }

    #[test]
    fn d_squared_vanishes_in_both_conventions() {
        for conv in [FiberConvention::Product, FiberConvention::Contact] {
            let c = calc(conv);
            let f = c.torus().sample(|x| 0.3 * (x[0] + x[2]).sin() * x[3].cos());
            let g = c.torus().sample(|x| (x[3] - x[0]).cos());
            let a = (fiber_coframe() ^ c.d_function(&g)).scale(&f) + (c.dc(&f) ^ c.d_function(&g));
            assert!(max_residual(&c.d(&c.d(&a))) < 1e-12);
        }
    }

    #[test]
    fn contact_fiber_derivative_is_kahler_form() {
        let c = calc(FiberConvention::Contact);
        assert_eq!(c.d(&fiber_coframe()), constant_basic(&kahler_form6()));
        let p = calc(FiberConvention::Product);
        assert!(p.d(&fiber_coframe()).is_zero());
    }

    #[test]
    fn dc_of_constant_vanishes_and_ddc_is_closed_type_11() {
        let c = calc(FiberConvention::Product);
        assert!(c.dc(&Field::Const(2.0)).is_zero());
        let f = c.torus().sample(|x| x[0].cos());
        let w = c.ddc(&f);
        assert!(max_residual(&c.d(&w)) < 1e-12);
        // f = cos x¹: d^c f = −½ sin x¹ dx², so dd^c f = −½ cos x¹ dx¹∧dx².
        let expected = KForm::monomial(7, &[1, 2], c.torus().sample(|x| -0.5 * x[0].cos())).unwrap();
        assert!(max_residual(&(w - expected)) < 1e-12);
    }

    #[test]
    fn flat_gradient_is_coordinate_gradient() {
        let c = calc(FiberConvention::Product);
        let f = c.torus().sample(|x| x[2].sin());
        let metrics = vec![Metric::<f64>::euclidean(6); c.points()];
        let grad = c.gradient(&f, &metrics).unwrap();
        let expected = c.torus().sample(|x| x[2].cos());
        assert!((grad.components[3].clone() - expected).max_abs() < 1e-12);
        for i in [0, 1, 2, 4, 5, 6] {
            assert!(grad.components[i].max_abs() < 1e-12);
        }
    }

    #[test]
    fn lie_derivative_of_closed_form_is_exact_part() {
        let c = calc(FiberConvention::Contact);
        let x = Vector::new((0..7).map(|i| c.torus().sample(move |p| (p[0] + i as f64).sin())).collect());
        let w = constant_basic(&kahler_form6());
        let lie = c.lie_derivative(&x, &w);
        let cartan = c.d(&interior(&x, &w));
        assert!(max_residual(&(lie - cartan)) < 1e-12);
        assert!(c.lie_derivative(&Vector::zero(7), &w).is_zero());
    }
}
