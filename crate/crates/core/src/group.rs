//! Compact groups `K ⊂ O(n)` and their normalized Haar averages.
//!
//! Finite groups carry exact rational matrices. `SO(2)` and `SO(3)` are
//! represented by quadrature rules for transcendental integrands and by
//! closed-form sphere moments for polynomial averages.

use std::collections::HashMap;
use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{format_rational, parse_rational, MultiIndex, Polynomial, Rational, Scalar};

/// Largest ambient dimension accepted from group specs.
pub const MAX_DIMENSION: usize = 8;
/// Largest finite group accepted from group specs.
pub const MAX_FINITE_ORDER: usize = 512;
/// Largest circle rule accepted from group specs.
pub const MAX_SO2_POINTS: usize = 1 << 20;
/// Largest Euler-angle resolution accepted from group specs (`r^3` nodes).
pub const MAX_SO3_RESOLUTION: usize = 96;

pub const DEFAULT_SO2_POINTS: usize = 256;
pub const DEFAULT_SO3_RESOLUTION: usize = 32;

#[derive(Clone, Debug)]
pub enum GroupKind {
    Finite(Vec<Matrix<Rational>>),
    So2 {
        quadrature_points: usize,
    },
    /// Euler-angle product rule: trapezoid in both azimuths, Gauss-Legendre
    /// in `cos(beta)`, `resolution` points per axis.
    So3 {
        resolution: usize,
    },
}

/// A validated compact group with its Haar quadrature.
#[derive(Clone, Debug)]
pub struct CompactGroup {
    n: usize,
    kind: GroupKind,
    nodes: Vec<Matrix<f64>>,
    layout: HaarLayout,
}

#[derive(Clone, Debug)]
enum HaarLayout {
    /// Equal weights over all nodes.
    Uniform,
    /// `beta_weights.len()` outer blocks of `inner` equally weighted nodes.
    Blocked { beta_weights: Vec<f64>, inner: usize },
}

impl CompactGroup {
    /// Validates a finite set of rational orthogonal matrices.
    pub fn finite(n: usize, elements: Vec<Matrix<Rational>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::MissingIdentity);
        }
        for m in &elements {
            if m.rows() != m.cols() {
                return Err(Error::NotSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if m.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.rows(),
                });
            }
        }
        for (i, m) in elements.iter().enumerate() {
            if !m.is_orthogonal() {
                return Err(Error::NotOrthogonal { index: i });
            }
        }
        let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
        for (i, m) in elements.iter().enumerate() {
            if let Some(&j) = seen.get(&matrix_key(m)) {
                return Err(Error::DuplicateElement {
                    index: i,
                    duplicate_of: j,
                });
            }
            seen.insert(matrix_key(m), i);
        }
        let id = Matrix::<Rational>::identity(n);
        if !seen.contains_key(&matrix_key(&id)) {
            return Err(Error::MissingIdentity);
        }
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                let ab = a.mul(b)?;
                if !seen.contains_key(&matrix_key(&ab)) {
                    return Err(Error::NotClosed { left: i, right: j });
                }
            }
        }
        let nodes = elements.iter().map(Matrix::to_f64).collect();
        Ok(CompactGroup {
            n,
            kind: GroupKind::Finite(elements),
            nodes,
            layout: HaarLayout::Uniform,
        })
    }

    pub fn trivial(n: usize) -> Self {
        Self::finite(n, vec![Matrix::identity(n)]).expect("identity group")
    }

    /// `{ +Id, -Id }` on `R^n`.
    pub fn sign_group(n: usize) -> Self {
        let id = Matrix::<Rational>::identity(n);
        let neg = id.map(|v| -v.clone());
        Self::finite(n, vec![id, neg]).expect("sign group")
    }

    pub fn so2(quadrature_points: usize) -> Result<Self> {
        if quadrature_points < 1 {
            return Err(Error::InvalidParameter(
                "quadrature_points must be positive".into(),
            ));
        }
        let nodes = (0..quadrature_points)
            .map(|j| rotation2(2.0 * PI * j as f64 / quadrature_points as f64))
            .collect();
        Ok(CompactGroup {
            n: 2,
            kind: GroupKind::So2 { quadrature_points },
            nodes,
            layout: HaarLayout::Uniform,
        })
    }

    pub fn so3(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(
                "so3 resolution must be at least 2".into(),
            ));
        }
        let gl = GaussLegendre::new(resolution).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let pairs = gl.into_node_weight_pairs();
        let mut nodes = Vec::with_capacity(resolution.pow(3));
        let mut beta_weights = Vec::with_capacity(resolution);
        for (u, w) in pairs {
            let beta = u.clamp(-1.0, 1.0).acos();
            beta_weights.push(w);
            for a in 0..resolution {
                let alpha = 2.0 * PI * a as f64 / resolution as f64;
                for g in 0..resolution {
                    let gamma = 2.0 * PI * g as f64 / resolution as f64;
                    nodes.push(euler_zyz(alpha, beta, gamma));
                }
            }
        }
        Ok(CompactGroup {
            n: 3,
            kind: GroupKind::So3 { resolution },
            nodes,
            layout: HaarLayout::Blocked {
                beta_weights,
                inner: resolution * resolution,
            },
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GroupKind::Finite(_) => "finite",
            GroupKind::So2 { .. } => "so2",
            GroupKind::So3 { .. } => "so3",
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite(_))
    }

    pub fn elements(&self) -> Option<&[Matrix<Rational>]> {
        match &self.kind {
            GroupKind::Finite(e) => Some(e),
            _ => None,
        }
    }

    /// Float matrices of the quadrature nodes (all elements for finite groups).
    pub fn nodes(&self) -> &[Matrix<f64>] {
        &self.nodes
    }

    /// Normalized weight of every node, in node order.
    pub fn weights(&self) -> Vec<f64> {
        match &self.layout {
            HaarLayout::Uniform => vec![1.0 / self.nodes.len() as f64; self.nodes.len()],
            HaarLayout::Blocked { beta_weights, inner } => {
                let total: f64 = beta_weights.iter().sum();
                beta_weights
                    .iter()
                    .flat_map(|w| std::iter::repeat_n(w / total / *inner as f64, *inner))
                    .collect()
            }
        }
    }

    /// Normalized Haar average of `f` over the group.
    ///
    /// `f` may be evaluated concurrently; the reduction order is fixed.
    pub fn haar_average<F>(&self, f: F) -> Complex64
    where
        F: Fn(&Matrix<f64>) -> Complex64 + Sync,
    {
        let values: Vec<Complex64> = if self.nodes.len() >= 1024 {
            self.nodes.par_iter().map(&f).collect()
        } else {
            self.nodes.iter().map(&f).collect()
        };
        self.reduce(&values)
    }

    /// Weighted mean of per-node values in node order.
    pub fn reduce(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        match &self.layout {
            HaarLayout::Uniform => {
                let s: Complex64 = values.iter().sum();
                s / values.len() as f64
            }
            HaarLayout::Blocked { beta_weights, inner } => {
                let mut num = Complex64::zero();
                let mut den = 0.0;
                for (block, w) in values.chunks(*inner).zip(beta_weights) {
                    let s: Complex64 = block.iter().sum();
                    num += *w * (s / *inner as f64);
                    den += *w;
                }
                num / den
            }
        }
    }

    /// Reynolds projection `p -> ∫_K p(k x) dk`, exact.
    pub fn reynolds<S: Scalar>(&self, p: &Polynomial<S>) -> Result<Polynomial<S>> {
        if p.n_vars() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.n_vars(),
            });
        }
        match &self.kind {
            GroupKind::Finite(elems) => {
                let mut acc = Polynomial::zero(self.n);
                for k in elems {
                    let q = p.compose_linear(&k.map(S::from_rational))?;
                    acc = acc.add(&q)?;
                }
                let inv = Rational::new(BigInt::one(), BigInt::from(elems.len()));
                Ok(acc.scale(&S::from_rational(&inv)))
            }
            GroupKind::So2 { .. } | GroupKind::So3 { .. } => {
                let norm_sq = norm_squared::<S>(self.n);
                let mut acc = Polynomial::zero(self.n);
                let mut powers: HashMap<u32, Polynomial<S>> = HashMap::new();
                for (idx, c) in p.terms() {
                    let Some(moment) = sphere_moment(self.n, idx) else {
                        continue;
                    };
                    let half = idx.degree() / 2;
                    let pw = powers
                        .entry(half)
                        .or_insert_with(|| norm_sq.pow(half))
                        .scale(&(c.clone() * S::from_rational(&moment)));
                    acc = acc.add(&pw)?;
                }
                Ok(acc)
            }
        }
    }

    /// Checks `p(k x) = p(x)` exactly. Finite groups are checked element by
    /// element, rotation groups through their exact Reynolds image.
    pub fn invariance_defect<S: Scalar>(&self, p: &Polynomial<S>) -> Result<Option<(String, Polynomial<S>)>> {
        match &self.kind {
            GroupKind::Finite(elems) => {
                for (i, k) in elems.iter().enumerate() {
                    let moved = p.compose_linear(&k.map(S::from_rational))?;
                    let d = moved.sub(p)?;
                    if !d.is_zero() {
                        return Ok(Some((format!("element {i}: {}", describe_matrix(k)), d)));
                    }
                }
                Ok(None)
            }
            _ => {
                let r = self.reynolds(p)?;
                let d = r.sub(p)?;
                if d.is_zero() {
                    Ok(None)
                } else {
                    Ok(Some((format!("{} Reynolds average", self.kind_name()), d)))
                }
            }
        }
    }

    /// Deterministic group elements used for spot-checking invariance of
    /// non-polynomial functions.
    pub fn audit_elements(&self) -> Vec<Matrix<f64>> {
        match &self.kind {
            GroupKind::Finite(_) => self.nodes.clone(),
            GroupKind::So2 { .. } => [0.3, 1.1, 2.9, 4.4].iter().map(|&t| rotation2(t)).collect(),
            GroupKind::So3 { .. } => [(0.3, 0.7, 1.9), (2.2, 2.5, 0.4), (4.0, 1.2, 5.5)]
                .iter()
                .map(|&(a, b, g)| euler_zyz(a, b, g))
                .collect(),
        }
    }

    pub fn to_spec(&self) -> GroupSpec {
        match &self.kind {
            GroupKind::Finite(elems) => GroupSpec {
                n: self.n,
                kind: "finite".into(),
                matrices: Some(
                    elems
                        .iter()
                        .map(|m| {
                            (0..m.rows())
                                .map(|i| m.row(i).iter().map(format_rational).collect())
                                .collect()
                        })
                        .collect(),
                ),
                quadrature_points: None,
            },
            GroupKind::So2 { quadrature_points } => GroupSpec {
                n: 2,
                kind: "so2".into(),
                matrices: None,
                quadrature_points: Some(*quadrature_points),
            },
            GroupKind::So3 { resolution } => GroupSpec {
                n: 3,
                kind: "so3".into(),
                matrices: None,
                quadrature_points: Some(*resolution),
            },
        }
    }
}

/// Group spec JSON: `{ "n", "kind", "matrices"?, "quadrature_points"? }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub n: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_points: Option<usize>,
}

impl GroupSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self) -> Result<CompactGroup> {
        if self.n == 0 || self.n > MAX_DIMENSION {
            return Err(Error::InvalidParameter(format!(
                "dimension {} outside 1..={MAX_DIMENSION}",
                self.n
            )));
        }
        match self.kind.as_str() {
            "finite" => {
                if self.quadrature_points.is_some() {
                    return Err(Error::Parse("finite groups take no quadrature_points".into()));
                }
                let raw = self
                    .matrices
                    .as_ref()
                    .ok_or_else(|| Error::Parse("finite group needs \"matrices\"".into()))?;
                if raw.len() > MAX_FINITE_ORDER {
                    return Err(Error::InvalidParameter(format!(
                        "group order {} exceeds {MAX_FINITE_ORDER}",
                        raw.len()
                    )));
                }
                let mut elems = Vec::with_capacity(raw.len());
                for m in raw {
                    let rows = m
                        .iter()
                        .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()?;
                    elems.push(Matrix::from_rows(rows)?);
                }
                CompactGroup::finite(self.n, elems)
            }
            "so2" | "so3" => {
                if self.matrices.is_some() {
                    return Err(Error::Parse("rotation groups take no matrices".into()));
                }
                let want = if self.kind == "so2" { 2 } else { 3 };
                if self.n != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        found: self.n,
                    });
                }
                if self.kind == "so2" {
                    let q = self.quadrature_points.unwrap_or(DEFAULT_SO2_POINTS);
                    if q > MAX_SO2_POINTS {
                        return Err(Error::InvalidParameter("too many quadrature points".into()));
                    }
                    CompactGroup::so2(q)
                } else {
                    let r = self.quadrature_points.unwrap_or(DEFAULT_SO3_RESOLUTION);
                    if r > MAX_SO3_RESOLUTION {
                        return Err(Error::InvalidParameter("so3 resolution too large".into()));
                    }
                    CompactGroup::so3(r)
                }
            }
            other => Err(Error::UnsupportedGroup(other.to_string())),
        }
    }
}

fn matrix_key(m: &Matrix<Rational>) -> Vec<String> {
    (0..m.rows())
        .flat_map(|i| m.row(i).iter().map(format_rational).collect::<Vec<_>>())
        .collect()
}

fn describe_matrix(m: &Matrix<Rational>) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let r: Vec<String> = m.row(i).iter().map(format_rational).collect();
            format!("[{}]", r.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

pub fn rotation2(theta: f64) -> Matrix<f64> {
    let (s, c) = theta.sin_cos();
    Matrix::from_rows(vec![vec![c, -s], vec![s, c]]).expect("2x2")
}

/// `Rz(alpha) Ry(beta) Rz(gamma)`.
pub fn euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Matrix<f64> {
    let rz = |t: f64| {
        let (s, c) = t.sin_cos();
        Matrix::from_rows(vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).expect("3x3")
    };
    let (s, c) = beta.sin_cos();
    let ry = Matrix::from_rows(vec![vec![c, 0.0, s], vec![0.0, 1.0, 0.0], vec![-s, 0.0, c]]).expect("3x3");
    rz(alpha).mul(&ry).and_then(|m| m.mul(&rz(gamma))).expect("3x3")
}

/// `x_1^2 + ... + x_n^2`.
pub fn norm_squared<S: Scalar>(n: usize) -> Polynomial<S> {
    let mut p = Polynomial::zero(n);
    for k in 0..n {
        let mut e = vec![0; n];
        e[k] = 2;
        p.add_term(MultiIndex::new(e), S::one());
    }
    p
}

/// Mean of `y^I` over the uniform probability measure on `S^{n-1}`:
/// `prod (i_k - 1)!! / (n (n+2) ... (n + |I| - 2))` for all-even `I`,
/// `None` (zero) otherwise.
pub fn sphere_moment(n: usize, idx: &MultiIndex) -> Option<Rational> {
    if idx.exponents().iter().any(|e| e % 2 == 1) {
        return None;
    }
    let mut num = BigInt::one();
    for &e in idx.exponents() {
        let mut k = e as i64 - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let mut den = BigInt::one();
    for k in 0..idx.degree() / 2 {
        den *= n as u64 + 2 * k as u64;
    }
    Some(Rational::new(num, den))
}
