use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector `I = (i_1, ..., i_n)`.
///
/// Ordered graded-lexicographically: lower total degree first, then larger
/// leading exponents first, so `x1^2 < x1 x2 < x2^2`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// The unit index `e_k` of length `len`.
    pub fn unit(len: usize, k: usize) -> Self {
        let mut e = vec![0; len];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn into_exponents(self) -> Vec<u32> {
        self.0
    }

    /// Plain degree `|I|_n = i_1 + ... + i_n`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `I! = i_1! * ... * i_n!`, exact.
    pub fn factorial(&self) -> BigUint {
        self.0
            .iter()
            .map(|&e| factorial(e))
            .fold(BigUint::one(), |acc, f| acc * f)
    }

    /// Weighted degree `j_1 deg_1 + ... + j_l deg_l`.
    pub fn graded_degree(&self, degrees: &[u32]) -> Result<u32> {
        if degrees.len() != self.0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.0.len(),
                found: degrees.len(),
            });
        }
        Ok(self.0.iter().zip(degrees).map(|(j, d)| j * d).sum())
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Concatenation `(I, J)`.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Splits into `(I[..at], I[at..])`.
    pub fn split_at(&self, at: usize) -> (MultiIndex, MultiIndex) {
        let (a, b) = self.0.split_at(at);
        (MultiIndex(a.to_vec()), MultiIndex(b.to_vec()))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

pub fn factorial(k: u32) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, j| acc * j)
}

/// All indices of length `len` and plain degree `m`, graded-lex order.
pub fn indices_of_degree(len: usize, m: u32) -> Vec<MultiIndex> {
    fn rec(pos: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for e in (0..=remaining).rev() {
            cur[pos] = e;
            rec(pos + 1, remaining - e, cur, out);
        }
        cur[pos] = 0;
    }
    if len == 0 {
        return if m == 0 { vec![MultiIndex(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(0, m, &mut vec![0; len], &mut out);
    out
}

/// All indices of length `len` with plain degree at most `max`, graded-lex order.
pub fn indices_up_to_degree(len: usize, max: u32) -> Vec<MultiIndex> {
    (0..=max).flat_map(|m| indices_of_degree(len, m)).collect()
}
