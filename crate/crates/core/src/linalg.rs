//! Small dense linear algebra over any [`Coefficient`] ring.
//!
//! Elimination only divides by invertible pivots, so the same routines work
//! exactly over rationals and over single-term symbolic entries.

use crate::scalar::Coefficient;

pub type Matrix<S> = Vec<Vec<S>>;

fn scale_of<S: Coefficient>(m: &[Vec<S>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter().map(Coefficient::magnitude))
        .fold(0.0, f64::max)
}

/// Best usable pivot in column `col` among rows `from..`: the largest
/// invertible, non-negligible entry.
fn find_pivot<S: Coefficient>(
    m: &[Vec<S>],
    col: usize,
    from: usize,
    scale: f64,
) -> Result<Option<(usize, S)>, ()> {
    let mut best: Option<(usize, S, f64)> = None;
    let mut blocked = false;
    for (r, row) in m.iter().enumerate().skip(from) {
        let v = &row[col];
        if v.is_negligible(scale) {
            continue;
        }
        match v.try_inv() {
            Some(inv) => {
                let mag = v.magnitude();
                if best.as_ref().map_or(true, |(_, _, m)| mag > *m) {
                    best = Some((r, inv, mag));
                }
            }
            None => blocked = true,
        }
    }
    match best {
        Some((r, inv, _)) => Ok(Some((r, inv))),
        None if blocked => Err(()),
        None => Ok(None),
    }
}

fn eliminate_below<S: Coefficient>(m: &mut [Vec<S>], prow: usize, col: usize, inv: &S) {
    let pivot_row = m[prow].clone();
    for row in m.iter_mut().skip(prow + 1) {
        if row[col].is_zero() {
            continue;
        }
        let factor = row[col].clone() * inv.clone();
        for (c, p) in pivot_row.iter().enumerate().skip(col) {
            row[c] = row[c].clone() - factor.clone() * p.clone();
        }
    }
}

/// Cofactor expansion; only used when no invertible pivot exists.
fn laplace<S: Coefficient>(m: &[Vec<S>]) -> S {
    let n = m.len();
    match n {
        0 => S::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = S::zero();
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let minor: Matrix<S> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][c].clone() * laplace(&minor);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Determinant of a square matrix.
pub fn determinant<S: Coefficient>(m: &[Vec<S>]) -> S {
    let n = m.len();
    let scale = scale_of(m);
    let mut work: Matrix<S> = m.to_vec();
    let mut det = S::one();
    for col in 0..n {
        match find_pivot(&work, col, col, scale) {
            Ok(Some((r, inv))) => {
                if r != col {
                    work.swap(r, col);
                    det = -det;
                }
                det = det * work[col][col].clone();
                eliminate_below(&mut work, col, col, &inv);
            }
            Ok(None) => return S::zero(),
            Err(()) => return laplace(m),
        }
    }
    det
}

/// Solve `m · x = rhs` for a square, nonsingular `m`.
pub fn solve<S: Coefficient>(m: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let cols: Matrix<S> = rhs.iter().map(|v| vec![v.clone()]).collect();
    let x = solve_many(m, &cols)?;
    Some(x.into_iter().map(|mut r| r.remove(0)).collect())
}

/// Solve `m · X = rhs` for several right-hand sides at once.
pub fn solve_many<S: Coefficient>(m: &[Vec<S>], rhs: &[Vec<S>]) -> Option<Matrix<S>> {
    let n = m.len();
    if rhs.len() != n || m.iter().any(|r| r.len() != n) {
        return None;
    }
    let k = rhs.first().map_or(0, Vec::len);
    let scale = scale_of(m);
    let mut aug: Matrix<S> = m
        .iter()
        .zip(rhs)
        .map(|(r, b)| r.iter().chain(b.iter()).cloned().collect())
        .collect();
    for col in 0..n {
        let (r, inv) = find_pivot(&aug, col, col, scale).ok()??;
        aug.swap(r, col);
        for v in aug[col].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = aug[col].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (c, p) in pivot_row.iter().enumerate().skip(col) {
                row[c] = row[c].clone() - factor.clone() * p.clone();
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..n + k].to_vec()).collect())
}

pub fn inverse<S: Coefficient>(m: &[Vec<S>]) -> Option<Matrix<S>> {
    let n = m.len();
    let id: Matrix<S> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect())
        .collect();
    solve_many(m, &id)
}

/// Least-squares solution of `a · x ≈ rhs` through the normal equations.
/// Rank-deficient directions (negligible pivots) get a zero component.
pub fn least_squares<S: Coefficient>(a: &[Vec<S>], rhs: &[S]) -> Vec<S> {
    let cols = a.first().map_or(0, Vec::len);
    let mut normal: Matrix<S> = vec![vec![S::zero(); cols + 1]; cols];
    for (row, b) in a.iter().zip(rhs) {
        for i in 0..cols {
            if row[i].is_zero() {
                continue;
            }
            for j in 0..cols {
                normal[i][j] = normal[i][j].clone() + row[i].clone() * row[j].clone();
            }
            normal[i][cols] = normal[i][cols].clone() + row[i].clone() * b.clone();
        }
    }
    let scale = normal
        .iter()
        .map(|r| r[..cols].iter().map(Coefficient::magnitude).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row >= cols {
            break;
        }
        let Ok(Some((r, inv))) = find_pivot(&normal, col, row, scale) else {
            continue;
        };
        normal.swap(r, row);
        for v in normal[row].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = normal[row].clone();
        for (i, other) in normal.iter_mut().enumerate() {
            if i == row || other[col].is_zero() {
                continue;
            }
            let factor = other[col].clone();
            for (c, p) in pivot_row.iter().enumerate().skip(col) {
                other[c] = other[c].clone() - factor.clone() * p.clone();
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let mut x = vec![S::zero(); cols];
    for (r, c) in pivots {
        x[c] = normal[r][cols].clone();
    }
    x
}

/// Sign information of all leading principal minors: `Some(true)` if all are
/// positive, `Some(false)` if one is known not to be, `None` if undecidable.
pub fn leading_minors_positive<S: Coefficient>(m: &[Vec<S>]) -> Option<bool> {
    let mut decided = true;
    for k in 1..=m.len() {
        let sub: Matrix<S> = m[..k].iter().map(|r| r[..k].to_vec()).collect();
        match determinant(&sub).is_positive() {
            Some(false) => return Some(false),
            None => decided = false,
            Some(true) => {}
        }
    }
    decided.then_some(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Poly, Rational, Symbol};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn exact_determinant_and_inverse() {
        let m = vec![
            vec![q(2, 1), q(1, 1), q(0, 1)],
            vec![q(1, 1), q(3, 1), q(1, 1)],
            vec![q(0, 1), q(1, 1), q(4, 1)],
        ];
        assert_eq!(determinant(&m), q(18, 1));
        let inv = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = q(0, 1);
                for k in 0..3 {
                    s = s + m[i][k].clone() * inv[k][j].clone();
                }
                assert_eq!(s, if i == j { q(1, 1) } else { q(0, 1) });
            }
        }
    }

    #[test]
    fn singular_matrix_has_zero_determinant() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(determinant(&m), 0.0);
        assert!(inverse(&m).is_none());
    }

    #[test]
    fn symbolic_diagonal_determinant() {
        let a = Poly::symbol(Symbol::FiberScale);
        let b = Poly::symbol(Symbol::BaseScale);
        let z = Poly::default();
        let m = vec![vec![a.clone(), z.clone()], vec![z, b.clone()]];
        assert_eq!(determinant(&m), a * b);
    }

    #[test]
    fn symbolic_fallback_to_cofactors() {
        let a = Poly::symbol(Symbol::FiberScale);
        let b = Poly::symbol(Symbol::BaseScale);
        let s = a.clone() + b.clone();
        let m = vec![vec![s.clone(), a.clone()], vec![b.clone(), s.clone()]];
        assert_eq!(determinant(&m), s.clone() * s - a * b);
    }

    #[test]
    fn least_squares_handles_rank_deficiency() {
        // Columns 0 and 1 are identical; the solution still reproduces rhs.
        let a = vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]];
        let rhs = [2.0, 3.0, 5.0];
        let x = least_squares(&a, &rhs);
        for (row, b) in a.iter().zip(rhs) {
            let v: f64 = row.iter().zip(&x).map(|(r, x)| r * x).sum();
            assert!((v - b).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_definiteness() {
        assert_eq!(leading_minors_positive(&[vec![2.0, 1.0], vec![1.0, 2.0]]), Some(true));
        assert_eq!(leading_minors_positive(&[vec![1.0, 2.0], vec![2.0, 1.0]]), Some(false));
    }
}
