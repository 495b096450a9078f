//! Small dense linear algebra: pivoted LU determinants and solves, and
//! Householder least squares.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Field, Real, Total};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Field> DenseMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![F::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Copy with row and column `k` removed.
    pub fn minor(&self, k: usize) -> Self {
        let n = self.n - 1;
        let idx: Vec<usize> = (0..self.n).filter(|&i| i != k).collect();
        Self::from_fn(n, |i, j| self[(idx[i], idx[j])])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.finite())
    }
}

impl<F> std::ops::Index<(usize, usize)> for DenseMatrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.n + j]
    }
}

impl<F> std::ops::IndexMut<(usize, usize)> for DenseMatrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.n + j]
    }
}

/// In-place LU factorization with partial pivoting.
struct Lu<F> {
    lu: DenseMatrix<F>,
    perm: Vec<usize>,
    odd: bool,
    singular: bool,
}

impl<F: Field> Lu<F> {
    fn factor(mut a: DenseMatrix<F>) -> Self {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].modulus();
            for i in k + 1..n {
                let v = a[(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == F::Real::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                for j in k + 1..n {
                    let u = a[(k, j)];
                    a[(i, j)] -= factor * u;
                }
            }
        }
        Self {
            lu: a,
            perm,
            odd,
            singular,
        }
    }

    fn det(&self) -> F {
        if self.singular {
            return F::zero();
        }
        let mut d = if self.odd { -F::one() } else { F::one() };
        for i in 0..self.lu.n {
            d *= self.lu[(i, i)];
        }
        d
    }

    fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        let mut x: Vec<F> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        Some(x)
    }
}
/// Determinant by LU with partial pivoting; the empty matrix has determinant 1.
pub fn det<F: Field>(m: &DenseMatrix<F>) -> Result<F> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entries"));
    }
    if m.n == 0 {
        return Ok(F::one());
    }
    Ok(Lu::factor(m.clone()).det())
}

/// Solves `a x = b`; `None` when `a` is exactly singular.
pub fn solve<F: Field>(a: &DenseMatrix<F>, b: &[F]) -> Result<Option<Vec<F>>> {
    if b.len() != a.n {
        return Err(Error::LengthMismatch {
            expected: a.n,
            got: b.len(),
        });
    }
    if !a.is_finite() || !b.iter().all(|x| x.finite()) {
        return Err(Error::NonFinite("linear system"));
    }
    Ok(Lu::factor(a.clone()).solve(b))
}

/// Least-squares solution of the overdetermined system `a x ≈ b`, with `a`
/// given as `rows` rows of `cols` entries (`rows >= cols`).
///
/// Returns the solution and the Euclidean norm of the residual.
pub fn least_squares<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<(Vec<T>, T)> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if b.len() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: b.len(),
        });
    }
    if rows < cols {
        return Err(Error::InvalidConfig("underdetermined least squares".into()));
    }
    let mut r: Vec<Vec<T>> = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..cols {
        let norm = (k..rows).map(|i| r[i][k] * r[i][k]).total().sqrt();
        if norm == T::zero() {
            return Err(Error::IllConditioned {
                residual: f64::INFINITY,
            });
        }
        let alpha = if r[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..rows).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).total();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..cols {
            let s: T = (k..rows).map(|i| v[i - k] * r[i][j]).total();
            let f = (s + s) / vnorm2;
            for i in k..rows {
                r[i][j] -= f * v[i - k];
            }
        }
        let s: T = (k..rows).map(|i| v[i - k] * y[i]).total();
        let f = (s + s) / vnorm2;
        for i in k..rows {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = vec![T::zero(); cols];
    for i in (0..cols).rev() {
        let mut s = y[i];
        for j in i + 1..cols {
            s -= r[i][j] * x[j];
        }
        if r[i][i] == T::zero() {
            return Err(Error::IllConditioned {
                residual: f64::INFINITY,
            });
        }
        x[i] = s / r[i][i];
    }
    let resid = (cols..rows).map(|i| y[i] * y[i]).total().sqrt();
    Ok((x, resid))
}
