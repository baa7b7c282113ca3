use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::multiindex::MultiIndex;
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Sparse polynomial in `n_vars` variables.
///
/// Terms are kept in graded-lex order and zero coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S> {
    n_vars: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, S::one())
    }

    pub fn constant(n_vars: usize, c: S) -> Self {
        Self::monomial(MultiIndex::zero(n_vars), c)
    }

    /// The coordinate function `x_k`.
    pub fn var(n_vars: usize, k: usize) -> Self {
        Self::monomial(MultiIndex::unit(n_vars, k), S::one())
    }

    pub fn monomial(index: MultiIndex, c: S) -> Self {
        let mut p = Polynomial {
            n_vars: index.len(),
            terms: BTreeMap::new(),
        };
        if !c.is_zero() {
            p.terms.insert(index, c);
        }
        p
    }

    /// Builds from `(exponents, coefficient)` pairs, summing repeated keys.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, S)>,
    {
        let mut p = Self::zero(n_vars);
        for (idx, c) in terms {
            if idx.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    expected: n_vars,
                    found: idx.len(),
                });
            }
            p.add_term(idx, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, index: &MultiIndex) -> S {
        self.terms.get(index).cloned().unwrap_or_else(S::zero)
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(MultiIndex::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// Adds `c * x^index` in place.
    pub fn add_term(&mut self, index: MultiIndex, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&index) {
            Some(v) => {
                let sum = v.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&index);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.terms.insert(index, c);
            }
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: other.n_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        let mut out = Self::zero(self.n_vars);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone() * c.clone());
        }
        out
    }

    /// Exact product (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n_vars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.n_vars);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base).expect("same arity");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same arity");
            }
        }
        result
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.n_vars);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }

    /// Evaluates at a point with coordinates in the coefficient field.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        self.check_point(x.len())?;
        let powers = power_table(x, self.max_exponents());
        let mut acc = S::zero();
        for (idx, c) in &self.terms {
            let mut t = c.clone();
            for (k, &e) in idx.exponents().iter().enumerate() {
                if e > 0 {
                    t = t * powers[k][e as usize].clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Evaluates at a complex point after converting the coefficients.
    pub fn eval_complex(&self, x: &[Complex64]) -> Result<Complex64> {
        self.check_point(x.len())?;
        let powers = power_table(x, self.max_exponents());
        let mut acc = Complex64::zero();
        for (idx, c) in &self.terms {
            let mut t = c.to_complex();
            for (k, &e) in idx.exponents().iter().enumerate() {
                if e > 0 {
                    t *= powers[k][e as usize];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Complex64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval_complex(&z)
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: len,
            });
        }
        Ok(())
    }

    fn max_exponents(&self) -> Vec<u32> {
        let mut m = vec![0; self.n_vars];
        for idx in self.terms.keys() {
            for (k, &e) in idx.exponents().iter().enumerate() {
                m[k] = m[k].max(e);
            }
        }
        m
    }

    /// Substitutes `x_k -> args[k]`, each argument a polynomial in a common
    /// variable set. Realizes `q(rho_1(x), ..., rho_l(x))`.
    pub fn substitute(&self, args: &[Polynomial<S>]) -> Result<Polynomial<S>> {
        self.check_point(args.len())?;
        let target = match args.first() {
            Some(a) => a.n_vars,
            None => 0,
        };
        for a in args {
            if a.n_vars != target {
                return Err(Error::DimensionMismatch {
                    expected: target,
                    found: a.n_vars,
                });
            }
        }
        let maxe = self.max_exponents();
        let powers: Vec<Vec<Polynomial<S>>> = args
            .iter()
            .zip(&maxe)
            .map(|(a, &m)| {
                let mut v = Vec::with_capacity(m as usize + 1);
                v.push(Polynomial::one(target));
                for e in 1..=m as usize {
                    let next = v[e - 1].mul(a).expect("same arity");
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(target);
        for (idx, c) in &self.terms {
            let mut t = Polynomial::constant(target, c.clone());
            for (k, &e) in idx.exponents().iter().enumerate() {
                if e > 0 {
                    t = t.mul(&powers[k][e as usize])?;
                }
            }
            for (i, v) in t.terms {
                out.add_term(i, v);
            }
        }
        Ok(out)
    }

    /// `x -> p(A x)`, expanded.
    pub fn compose_linear(&self, a: &Matrix<S>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if a.rows() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: a.rows(),
            });
        }
        let n = self.n_vars;
        let forms: Vec<Polynomial<S>> = (0..n)
            .map(|i| {
                let mut f = Polynomial::zero(n);
                for j in 0..n {
                    f.add_term(MultiIndex::unit(n, j), a.get(i, j).clone());
                }
                f
            })
            .collect();
        self.substitute(&forms)
    }

    /// `d^K p` for a multi-index `K`.
    pub fn differentiate(&self, k: &MultiIndex) -> Result<Self> {
        if k.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: k.len(),
            });
        }
        let mut out = Self::zero(self.n_vars);
        for (idx, c) in &self.terms {
            if let Some(rest) = idx.checked_sub(k) {
                let f = falling_factorial_product(idx, k);
                out.add_term(rest, c.clone() * S::from_biguint(&f));
            }
        }
        Ok(out)
    }

    /// Applies the constant-coefficient operator obtained from `op` by
    /// replacing `x_k` with `d/dx_k`.
    pub fn apply_operator(&self, op: &Self) -> Result<Self> {
        self.check_same(op)?;
        let mut out = Self::zero(self.n_vars);
        for (k, ck) in &op.terms {
            let d = self.differentiate(k)?;
            for (i, v) in d.terms {
                out.add_term(i, ck.clone() * v);
            }
        }
        Ok(out)
    }

    /// Components `(m, p_m)` with `p = sum_m p_m`, ascending `m`; zero
    /// components are omitted.
    pub fn homogeneous_components(&self) -> Vec<(u32, Self)> {
        let mut comps: BTreeMap<u32, Self> = BTreeMap::new();
        for (idx, c) in &self.terms {
            comps
                .entry(idx.degree())
                .or_insert_with(|| Self::zero(self.n_vars))
                .terms
                .insert(idx.clone(), c.clone());
        }
        comps.into_iter().collect()
    }

    /// Degree-`m` component.
    pub fn component(&self, m: u32) -> Self {
        Polynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() == m)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps terms whose index satisfies `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        Polynomial {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Largest coefficient magnitude, 0 for the zero polynomial.
    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(S::magnitude).fold(0.0, f64::max)
    }
}

/// `(d^K p)(0) = sum_I q_I p_I I!` where `q` is read as the operator `d^q`.
pub fn derivative_at_zero_pairing<S: Scalar>(q: &Polynomial<S>, p: &Polynomial<S>) -> Result<S> {
    q.check_same(p)?;
    let (small, large) = if q.len() <= p.len() { (q, p) } else { (p, q) };
    let mut acc = S::zero();
    for (idx, c) in &small.terms {
        if let Some(d) = large.terms.get(idx) {
            acc = acc + c.clone() * d.clone() * S::from_biguint(&idx.factorial());
        }
    }
    Ok(acc)
}

/// `prod_k i_k! / (i_k - k_k)!`.
fn falling_factorial_product(i: &MultiIndex, k: &MultiIndex) -> num_bigint::BigUint {
    let mut f = num_bigint::BigUint::one();
    for (&a, &b) in i.exponents().iter().zip(k.exponents()) {
        for v in (a - b + 1)..=a {
            f *= v;
        }
    }
    f
}

fn power_table<T: Clone + One + std::ops::Mul<Output = T>>(x: &[T], maxe: Vec<u32>) -> Vec<Vec<T>> {
    x.iter()
        .zip(maxe)
        .map(|(v, m)| {
            let mut p = Vec::with_capacity(m as usize + 1);
            p.push(T::one());
            for e in 1..=m as usize {
                let next = p[e - 1].clone() * v.clone();
                p.push(next);
            }
            p
        })
        .collect()
}

impl<S: Scalar> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (idx, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:?}*x^{idx:?}")?;
        }
        Ok(())
    }
}
