//! Dense matrices and exact rational linear algebra.
//!
//! The minimum-norm solver works from a rank factorization `A = C R`
//! (`C` = pivot columns of `A`, `R` = nonzero rows of `rref(A)`), giving
//! `A^+ = R^T (R R^T)^{-1} (C^T C)^{-1} C^T` with both Gram matrices
//! square, invertible and of size `rank(A)`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{rational_to_f64, Rational, Scalar};

#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).clone() + a.clone() * b.clone();
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// `M^T M == I` exactly.
    pub fn is_orthogonal(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let g = self.transpose().mul(self).expect("square");
        g == Self::identity(self.rows)
    }

    /// Columns `cols` of `self`, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out.set(i, jj, self.get(i, j).clone());
            }
        }
        out
    }
}

impl Matrix<Rational> {
    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(rational_to_f64)
    }
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &Matrix<Rational>) -> (Matrix<Rational>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..a.cols {
                a.data.swap(p * a.cols + j, r * a.cols + j);
            }
        }
        let inv = a.get(r, c).recip();
        for j in c..a.cols {
            let v = a.get(r, j) * &inv;
            a.set(r, j, v);
        }
        for i in 0..a.rows {
            if i == r {
                continue;
            }
            let f = a.get(i, c).clone();
            if f.is_zero() {
                continue;
            }
            for j in c..a.cols {
                let pv = a.get(r, j);
                if pv.is_zero() {
                    continue;
                }
                let v = a.get(i, j) - &f * pv;
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(m: &Matrix<Rational>) -> usize {
    rref(m).1.len()
}

/// Exact inverse, `None` if singular.
pub fn inverse(m: &Matrix<Rational>) -> Option<Matrix<Rational>> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j).clone());
        }
        aug.set(i, n + i, Rational::one());
    }
    let (red, piv) = rref(&aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, red.get(i, n + j).clone());
        }
    }
    Some(inv)
}

/// Minimum-Euclidean-norm solutions of consistent systems `A a = b`.
#[derive(Clone, Debug)]
pub struct MinNormSolver {
    a: Matrix<Rational>,
    pinv: Matrix<Rational>,
    rank: usize,
}

impl MinNormSolver {
    pub fn new(a: &Matrix<Rational>) -> Self {
        let (red, pivots) = rref(a);
        let r = pivots.len();
        let pinv = if r == 0 {
            Matrix::zeros(a.cols, a.rows)
        } else {
            let c = a.select_columns(&pivots);
            let mut rmat = Matrix::zeros(r, a.cols);
            for i in 0..r {
                for j in 0..a.cols {
                    rmat.set(i, j, red.get(i, j).clone());
                }
            }
            let ctc = c.transpose().mul(&c).expect("shape");
            let rrt = rmat.mul(&rmat.transpose()).expect("shape");
            let ctc_inv = inverse(&ctc).expect("C has full column rank");
            let rrt_inv = inverse(&rrt).expect("R has full row rank");
            rmat.transpose()
                .mul(&rrt_inv)
                .and_then(|x| x.mul(&ctc_inv))
                .and_then(|x| x.mul(&c.transpose()))
                .expect("shape")
        };
        MinNormSolver {
            a: a.clone(),
            pinv,
            rank: r,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &Matrix<Rational> {
        &self.a
    }

    /// The Moore-Penrose pseudo-inverse `A^+` (cols x rows).
    pub fn pseudo_inverse(&self) -> &Matrix<Rational> {
        &self.pinv
    }

    /// Returns the minimum-norm solution, or `Err(residual)` with
    /// `residual = b - A A^+ b` (the least-squares residual) when the system
    /// is inconsistent.
    pub fn solve<S: Scalar>(&self, b: &[S]) -> std::result::Result<Vec<S>, Vec<S>> {
        assert_eq!(b.len(), self.a.rows(), "rhs length");
        let x = sparse_apply(&self.pinv, b);
        let ax = sparse_apply(&self.a, &x);
        let residual: Vec<S> = b.iter().zip(ax).map(|(bi, yi)| bi.clone() - yi).collect();
        if residual.iter().all(Zero::is_zero) {
            Ok(x)
        } else {
            Err(residual)
        }
    }
}

/// `m v` for a rational matrix acting on any module over the rationals.
pub fn sparse_apply<V>(m: &Matrix<Rational>, v: &[V]) -> Vec<V>
where
    V: Clone + Zero + std::ops::Add<Output = V> + ScaleByRational,
{
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(v)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .fold(V::zero(), |acc, (a, b)| acc + b.scale_by(a))
        })
        .collect()
}

/// Multiplication by an exact rational.
pub trait ScaleByRational {
    fn scale_by(&self, r: &Rational) -> Self;
}

impl<S: Scalar> ScaleByRational for S {
    fn scale_by(&self, r: &Rational) -> Self {
        self.clone() * S::from_rational(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn m(rows: Vec<Vec<i64>>) -> Matrix<Rational> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| rat(v, 1)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rref_and_rank() {
        let a = m(vec![vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]);
        assert_eq!(rank(&a), 2);
        let (_, piv) = rref(&a);
        assert_eq!(piv, vec![0, 1]);
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(vec![vec![2, 1], vec![5, 3]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(2));
        assert!(inverse(&m(vec![vec![1, 2], vec![2, 4]])).is_none());
    }

    #[test]
    fn minimum_norm_underdetermined() {
        // x + y = 2 -> (1, 1)
        let s = MinNormSolver::new(&m(vec![vec![1, 1]]));
        assert_eq!(s.solve(&[rat(2, 1)]).unwrap(), vec![rat(1, 1), rat(1, 1)]);
    }

    #[test]
    fn minimum_norm_rank_deficient_both_sides() {
        // rows dependent, columns dependent
        let a = m(vec![vec![1, 1, 0], vec![2, 2, 0]]);
        let s = MinNormSolver::new(&a);
        assert_eq!(s.rank(), 1);
        assert_eq!(
            s.solve(&[rat(4, 1), rat(8, 1)]).unwrap(),
            vec![rat(2, 1), rat(2, 1), rat(0, 1)]
        );
        let res = s.solve(&[rat(1, 1), rat(0, 1)]).unwrap_err();
        // projection of (1,0) onto span{(1,2)} is (1/5, 2/5)
        assert_eq!(res, vec![rat(4, 5), rat(-2, 5)]);
    }

    #[test]
    fn penrose_conditions() {
        let a = m(vec![vec![1, 0, 1, 2], vec![0, 1, 1, 0], vec![1, 1, 2, 2]]);
        let s = MinNormSolver::new(&a);
        let p = s.pseudo_inverse();
        let apa = a.mul(p).unwrap().mul(&a).unwrap();
        assert_eq!(apa, a);
        let pap = p.mul(&a).unwrap().mul(p).unwrap();
        assert_eq!(&pap, p);
        let ap = a.mul(p).unwrap();
        assert_eq!(ap.transpose(), ap);
        let pa = p.mul(&a).unwrap();
        assert_eq!(pa.transpose(), pa);
    }

    #[test]
    fn zero_matrix() {
        let s = MinNormSolver::new(&Matrix::<Rational>::zeros(2, 0));
        assert_eq!(s.solve(&[rat(0, 1), rat(0, 1)]).unwrap(), Vec::<Rational>::new());
        assert!(s.solve(&[rat(1, 1), rat(0, 1)]).is_err());
    }
}
