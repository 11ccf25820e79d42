//! Perron root of nonnegative irreducible matrices.
//!
//! Plain power iteration stalls when the second eigenvalue is close to the
//! Perron root, which is exactly what happens to the transfer matrix at large
//! `beta` whenever the Aubry set has several maximal pieces (the gap behaves
//! like `e^{lambda * beta}`). We use shifted inverse iteration with the shift
//! taken from the Collatz–Wielandt upper bound (Noda iteration): the shift
//! stays above the Perron root, the iterates stay positive, and every step
//! yields a certified bracket `lower <= rho <= upper`.

use std::fmt;

use thiserror::Error;

/// Arithmetic needed by the iteration. Implemented for `f64` and for the
/// extended-precision real used by the pressure module.
pub trait Real: Clone + PartialOrd + fmt::Debug {
    /// Zero with the same precision as `self`.
    fn zero_like(&self) -> Self;
    /// One with the same precision as `self`.
    fn one_like(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl Real for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerronError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square")]
    NotSquare,
    #[error("Perron iteration did not converge after {iterations} iterations (bracket width {width:e})")]
    NoConvergence { iterations: usize, width: f64 },
}

#[derive(Debug, Clone)]
pub struct PerronRoot<R> {
    pub lower: R,
    pub upper: R,
    /// Positive right eigenvector approximation, sup-norm 1.
    pub vector: Vec<R>,
    pub iterations: usize,
}

impl<R: Real> PerronRoot<R> {
    /// Midpoint of the bracket.
    pub fn value(&self) -> R {
        let two = self.upper.one_like().add(&self.upper.one_like());
        self.lower.add(&self.upper).div(&two)
    }
}

/// Perron root of an irreducible nonnegative matrix acting as `y = M x`.
///
/// `rel_tol` is given in the scalar type so extended precision can ask for
/// tolerances below the `f64` range.
pub fn perron_root<R: Real>(matrix: &[Vec<R>], rel_tol: &R, max_iters: usize) -> Result<PerronRoot<R>, PerronError> {
    let n = matrix.len();
    if n == 0 {
        return Err(PerronError::Empty);
    }
    if matrix.iter().any(|row| row.len() != n) {
        return Err(PerronError::NotSquare);
    }
    let one = matrix[0][0].one_like();
    let mut x = vec![one.clone(); n];
    let (mut lower, mut upper) = collatz_wielandt(matrix, &x).expect("positive start vector");
    let mut iterations = 0;

    loop {
        if upper.sub(&lower) <= rel_tol.mul(&upper) {
            break;
        }
        if iterations >= max_iters {
            return Err(PerronError::NoConvergence {
                iterations,
                width: upper.sub(&lower).to_f64(),
            });
        }
        iterations += 1;

        let shifted: Vec<Vec<R>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let m = matrix[i][j].zero_like().sub(&matrix[i][j]);
                        if i == j {
                            m.add(&upper)
                        } else {
                            m
                        }
                    })
                    .collect()
            })
            .collect();
        let Some(z) = solve(shifted, x.clone()) else {
            // upper is an eigenvalue to working precision
            lower = upper.clone();
            break;
        };
        let z: Vec<R> = z.iter().map(Real::abs).collect();
        let scale = z
            .iter()
            .cloned()
            .fold(z[0].zero_like(), |a, b| if b > a { b } else { a });
        if scale.is_zero() {
            break;
        }
        x = z.iter().map(|v| v.div(&scale)).collect();
        match collatz_wielandt(matrix, &x) {
            Some((lo, hi)) => {
                let improved = hi < upper || lo > lower;
                if lo > lower {
                    lower = lo;
                }
                if hi < upper {
                    upper = hi;
                }
                if !improved {
                    // bracket cannot shrink further at this precision
                    break;
                }
            }
            None => {
                // a component underflowed to zero; only the lower bound survives
                if let Some(lo) = lower_bound(matrix, &x) {
                    if lo > lower {
                        lower = lo;
                    }
                }
                break;
            }
        }
    }

    Ok(PerronRoot {
        lower,
        upper,
        vector: x,
        iterations,
    })
}

fn apply<R: Real>(matrix: &[Vec<R>], x: &[R]) -> Vec<R> {
    matrix
        .iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(x[0].zero_like(), |acc, (m, xi)| acc.add(&m.mul(xi)))
        })
        .collect()
}

/// `(min_i (Mx)_i / x_i, max_i (Mx)_i / x_i)`; `None` unless `x > 0`.
fn collatz_wielandt<R: Real>(matrix: &[Vec<R>], x: &[R]) -> Option<(R, R)> {
    if x.iter().any(Real::is_zero) {
        return None;
    }
    let y = apply(matrix, x);
    let ratios: Vec<R> = y.iter().zip(x).map(|(yi, xi)| yi.div(xi)).collect();
    let mut lo = ratios[0].clone();
    let mut hi = ratios[0].clone();
    for r in &ratios[1..] {
        if *r < lo {
            lo = r.clone();
        }
        if *r > hi {
            hi = r.clone();
        }
    }
    Some((lo, hi))
}

fn lower_bound<R: Real>(matrix: &[Vec<R>], x: &[R]) -> Option<R> {
    let y = apply(matrix, x);
    y.iter()
        .zip(x)
        .filter(|(_, xi)| !xi.is_zero())
        .map(|(yi, xi)| yi.div(xi))
        .fold(None, |acc: Option<R>, r| match acc {
            Some(a) if a <= r => Some(a),
            _ => Some(r),
        })
}

/// Gaussian elimination with partial pivoting. `None` on an exactly zero pivot.
fn solve<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Option<Vec<R>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].div(&a[col][col]);
            for k in col..n {
                let delta = factor.mul(&a[col][k]);
                a[row][k] = a[row][k].sub(&delta);
            }
            let delta = factor.mul(&b[col]);
            b[row] = b[row].sub(&delta);
        }
    }
    let mut x = vec![b[0].zero_like(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc.sub(&a[row][k].mul(&x[k]));
        }
        x[row] = acc.div(&a[row][row]);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(m: &[Vec<f64>]) -> f64 {
        perron_root(m, &1e-14, 1000).unwrap().value()
    }

    #[test]
    fn golden_mean() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((root(&[vec![1.0, 1.0], vec![1.0, 0.0]]) - phi).abs() < 1e-13);
    }

    #[test]
    fn periodic_matrix_converges() {
        // 3-cycle permutation plus a chord: irreducible but not primitive
        let m = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        assert_eq!(root(&m), 1.0);
        let m2 = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(root(&m2), 1.0);
    }

    #[test]
    fn nearly_degenerate_spectrum() {
        // eigenvalues 1 +- 1e-6: power iteration would need ~1e7 steps
        let a = 1e-6;
        let m = vec![vec![1.0, a], vec![a, 1.0]];
        let r = perron_root(&m, &1e-15, 200).unwrap();
        assert!((r.value() - (1.0 + a)).abs() < 1e-14, "{r:?}");
        assert!(r.iterations < 100);
    }

    #[test]
    fn bracket_contains_root() {
        let m = vec![vec![1.0, 2.0, 0.5], vec![0.1, 0.0, 3.0], vec![1.0, 1.0, 1.0]];
        let r = perron_root(&m, &1e-13, 1000).unwrap();
        let y = apply(&m, &r.vector);
        for (yi, xi) in y.iter().zip(&r.vector) {
            assert!((yi / xi - r.value()).abs() < 1e-10);
        }
        assert!(r.lower <= r.upper);
    }
}
