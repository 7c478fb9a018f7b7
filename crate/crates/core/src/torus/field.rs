use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::TorusError;
use crate::scalar::{Coefficient, FLOAT_NEGLIGIBLE};

/// Real function on the torus grid, or a constant (broadcast on use).
#[derive(Clone, Debug)]
pub enum Field {
    Const(f64),
    Grid(Arc<[f64]>),
}

impl Field {
    pub fn from_vec(v: Vec<f64>) -> Self {
        Field::Grid(v.into())
    }

    pub fn value(&self, p: usize) -> f64 {
        match self {
            Field::Const(c) => *c,
            Field::Grid(v) => v[p],
        }
    }

    /// Values at every point of a grid with `len` points.
    pub fn to_vec(&self, len: usize) -> Vec<f64> {
        match self {
            Field::Const(c) => vec![*c; len],
            Field::Grid(v) => v.to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Field {
        match self {
            Field::Const(c) => Field::Const(f(*c)),
            Field::Grid(v) => Field::Grid(v.iter().map(|x| f(*x)).collect()),
        }
    }

    fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        match (self, other) {
            (Field::Const(a), Field::Const(b)) => Field::Const(f(*a, *b)),
            (Field::Const(a), Field::Grid(v)) => Field::Grid(v.iter().map(|b| f(*a, *b)).collect()),
            (Field::Grid(v), Field::Const(b)) => Field::Grid(v.iter().map(|a| f(*a, *b)).collect()),
            (Field::Grid(u), Field::Grid(v)) => {
                assert_eq!(u.len(), v.len(), "fields on different grids");
                Field::Grid(u.iter().zip(v.iter()).map(|(a, b)| f(*a, *b)).collect())
            }
        }
    }

    pub fn div(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a / b)
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Field::Const(c) => c.abs(),
            Field::Grid(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn mean_abs(&self) -> f64 {
        match self {
            Field::Const(c) => c.abs(),
            Field::Grid(v) => v.iter().map(|x| x.abs()).sum::<f64>() / v.len().max(1) as f64,
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Field::Const(c) => *c,
            Field::Grid(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Field::Const(c) => *c,
            Field::Grid(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn ln(&self) -> Field {
        self.map(f64::ln)
    }

    pub fn sqrt(&self) -> Field {
        self.map(f64::sqrt)
    }

    fn all(&self, f: impl Fn(f64) -> bool) -> bool {
        match self {
            Field::Const(c) => f(*c),
            Field::Grid(v) => v.iter().all(|x| f(*x)),
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Field) -> bool {
        match (self, other) {
            (Field::Const(a), Field::Const(b)) => a == b,
            (Field::Const(a), Field::Grid(v)) | (Field::Grid(v), Field::Const(a)) => v.iter().all(|x| x == a),
            (Field::Grid(u), Field::Grid(v)) => u == v,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Const(c) => write!(f, "{c}"),
            Field::Grid(v) => write!(f, "field[{}; range {:.3e}..{:.3e}]", v.len(), self.min(), self.max()),
        }
    }
}

impl Add for Field {
    type Output = Field;
    fn add(self, rhs: Field) -> Field {
        if let Field::Const(c) = rhs {
            if c == 0.0 {
                return self;
            }
        }
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for Field {
    type Output = Field;
    fn sub(self, rhs: Field) -> Field {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl Mul for Field {
    type Output = Field;
    fn mul(self, rhs: Field) -> Field {
        match (&self, &rhs) {
            (Field::Const(c), _) if *c == 1.0 => rhs,
            (_, Field::Const(c)) if *c == 1.0 => self,
            _ => self.zip(&rhs, |a, b| a * b),
        }
    }
}

impl Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|x| -x)
    }
}

impl Coefficient for Field {
    fn zero() -> Self {
        Field::Const(0.0)
    }
    fn one() -> Self {
        Field::Const(1.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Field::Const(num as f64 / den as f64)
    }
    fn is_zero(&self) -> bool {
        self.all(|x| x == 0.0)
    }
    fn try_inv(&self) -> Option<Self> {
        self.all(|x| x != 0.0 && x.is_finite()).then(|| self.map(|x| 1.0 / x))
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        if !self.all(|x| x.try_root(n).is_some()) {
            return None;
        }
        Some(self.map(|x| x.try_root(n).unwrap_or(f64::NAN)))
    }
    fn is_positive(&self) -> Option<bool> {
        Some(self.all(|x| x > 0.0))
    }
    fn magnitude(&self) -> f64 {
        self.max_abs()
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.max_abs() <= FLOAT_NEGLIGIBLE * scale.max(1.0)
    }
    fn pow(&self, exp: u32) -> Self {
        self.map(|x| x.powi(exp as i32))
    }
}

/// Uniform grid on `[0, 2π)⁶` resolving only a few active coordinates.
///
/// Fields are constant along inactive axes, so storage is `nᵏ` for `k`
/// active axes. Differentiation is Fourier collocation, exact on the
/// represented modes.
#[derive(Clone)]
pub struct Torus {
    n: usize,
    axes: Vec<usize>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Torus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Torus").field("n", &self.n).field("axes", &self.axes).finish()
    }
}

/// Wave vector on the 6-torus.
pub type Mode = [i32; 6];

impl Torus {
    pub const MAX_ACTIVE_AXES: usize = 3;

    pub fn new(n: usize, axes: &[usize]) -> Result<Self, TorusError> {
        if n < 4 || n % 2 != 0 {
            return Err(TorusError::Grid(format!("grid size must be even and ≥ 4, got {n}")));
        }
        if axes.len() > Self::MAX_ACTIVE_AXES {
            return Err(TorusError::Grid(format!("at most 3 active axes, got {}", axes.len())));
        }
        let mut sorted = axes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != axes.len() || sorted.iter().any(|a| *a >= 6) {
            return Err(TorusError::Grid(format!("invalid active axes {axes:?}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Torus { n, axes: sorted, fft: planner.plan_fft_forward(n), ifft: planner.plan_fft_inverse(n) })
    }

    /// Smallest torus resolving the given modes.
    pub fn for_modes(n: usize, modes: &[Mode]) -> Result<Self, TorusError> {
        let axes: Vec<usize> = (0..6).filter(|a| modes.iter().any(|m| m[*a] != 0)).collect();
        Self::new(n, &axes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.axes.len() as u32)
    }

    fn stride(&self, pos: usize) -> usize {
        self.n.pow((self.axes.len() - 1 - pos) as u32)
    }

    /// Base coordinates of grid point `p` (inactive coordinates are 0).
    pub fn coords(&self, p: usize) -> [f64; 6] {
        let mut x = [0.0; 6];
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        for (pos, &a) in self.axes.iter().enumerate() {
            x[a] = ((p / self.stride(pos)) % self.n) as f64 * h;
        }
        x
    }

    pub fn sample(&self, f: impl Fn(&[f64; 6]) -> f64) -> Field {
        Field::from_vec((0..self.points()).map(|p| f(&self.coords(p))).collect())
    }

    fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n as i64;
        let k = if (j as i64) < n / 2 { j as i64 } else { j as i64 - n };
        k as f64
    }

    /// `∂f/∂x^axis` for a base axis `axis ∈ 0..6`.
    pub fn derivative(&self, f: &Field, axis: usize) -> Field {
        let Some(pos) = self.axes.iter().position(|a| *a == axis) else {
            return Field::Const(0.0);
        };
        let data = match f {
            Field::Const(_) => return Field::Const(0.0),
            Field::Grid(v) => v,
        };
        let n = self.n;
        let stride = self.stride(pos);
        let mut out = vec![0.0; data.len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..data.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for (j, c) in line.iter_mut().enumerate() {
                *c = Complex64::new(data[start + j * stride], 0.0);
            }
            self.fft.process(&mut line);
            for (j, c) in line.iter_mut().enumerate() {
                // The Nyquist mode has no odd-derivative partner.
                let k = if j == n / 2 { 0.0 } else { self.wavenumber(j) };
                *c *= Complex64::new(0.0, k / n as f64);
            }
            self.ifft.process(&mut line);
            for (j, c) in line.iter().enumerate() {
                out[start + j * stride] = c.re;
            }
        }
        Field::from_vec(out)
    }

    /// Nonzero Fourier coefficients `c_k` with `f = Re Σ c_k e^{ik·x}`.
    pub fn modes(&self, f: &Field) -> Vec<(Mode, Complex64)> {
        let data = f.to_vec(self.points());
        let mut spec: Vec<Complex64> = data.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let n = self.n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for pos in 0..self.axes.len() {
            let stride = self.stride(pos);
            for start in 0..spec.len() {
                if (start / stride) % n != 0 {
                    continue;
                }
                for (j, c) in line.iter_mut().enumerate() {
                    *c = spec[start + j * stride];
                }
                self.fft.process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    spec[start + j * stride] = *c / n as f64;
                }
            }
        }
        let scale = f.max_abs().max(1.0);
        spec.iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-14 * scale)
            .map(|(p, c)| {
                let mut k = [0i32; 6];
                for (pos, &a) in self.axes.iter().enumerate() {
                    k[a] = self.wavenumber((p / self.stride(pos)) % n) as i32;
                }
                (k, *c)
            })
            .collect()
    }

    /// `f = Re Σ c_k e^{ik·x}`.
    pub fn from_modes(&self, modes: &[(Mode, Complex64)]) -> Result<Field, TorusError> {
        for (k, _) in modes {
            if let Some(a) = (0..6).find(|a| k[*a] != 0 && !self.axes.contains(a)) {
                return Err(TorusError::Grid(format!("mode {k:?} uses inactive axis {a}")));
            }
            if k.iter().any(|v| v.unsigned_abs() as usize > self.n / 2) {
                return Err(TorusError::Grid(format!("mode {k:?} is not resolved by n = {}", self.n)));
            }
        }
        Ok(self.sample(|x| {
            modes
                .iter()
                .map(|(k, c)| {
                    let phase: f64 = k.iter().zip(x).map(|(k, x)| *k as f64 * x).sum();
                    (c * Complex64::from_polar(1.0, phase)).re
                })
                .sum()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_is_exact_on_modes() {
        let t = Torus::new(16, &[0, 2]).unwrap();
        let f = t.sample(|x| (2.0 * x[0] + x[2]).sin());
        let df = t.derivative(&f, 0);
        let expected = t.sample(|x| 2.0 * (2.0 * x[0] + x[2]).cos());
        assert!((df - expected).max_abs() < 1e-12);
        assert_eq!(t.derivative(&f, 1), Field::Const(0.0));
    }

    #[test]
    fn mode_round_trip() {
        let t = Torus::new(8, &[0, 3]).unwrap();
        let modes = vec![([1, 0, 0, 0, 0, 0], Complex64::new(0.05, 0.0)), ([0, 0, 0, 2, 0, 0], Complex64::new(0.0, -0.3))];
        let f = t.from_modes(&modes).unwrap();
        let back = t.from_modes(&t.modes(&f)).unwrap();
        assert!((back - f).max_abs() < 1e-14);
        assert!(t.from_modes(&[([0, 1, 0, 0, 0, 0], Complex64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Torus::new(7, &[0]).is_err());
        assert!(Torus::new(8, &[0, 1, 2, 3]).is_err());
        assert!(Torus::new(8, &[6]).is_err());
    }
}
