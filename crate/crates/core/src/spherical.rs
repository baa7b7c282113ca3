//! Spherical functions `phi_xi(x) = ∫_K exp(i <x, k xi>) dk` and their
//! generator series.
//!
//! The Taylor coefficients of `phi_xi` at the origin are
//! `b_I(xi) = i^|I| / I! * R(x^I)(xi)` with `R` the Reynolds operator. Each
//! `R(x^I)` is invariant, so `b_I` is stored as a polynomial in generator
//! variables `t`. Per degree `m`, the coefficients `q_J` of
//! `h_xi(t) = sum_J q_J(rho(xi)) t^J` solve `A a = b` with the minimum-norm
//! rule, `A` being the expansion matrix of that degree.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariant::{enumerate_graded_up_to, GelfandPair, SpecialAssumption};
use crate::poly::{
    i_pow, i_pow_f64, indices_of_degree, GaussianRational, MultiIndex, Polynomial, Rational, Scalar,
};

/// `phi_xi(x)` by Haar averaging.
///
/// For finite groups every phase `<x, k xi>` is summed from its `n^2` terms
/// `k_ij (x_i xi_j)` in sorted order, and the exponentials are accumulated
/// over phases in sorted order. The result is then bitwise symmetric under
/// `x <-> xi` and exactly 1 at `x = 0`.
#[allow(clippy::needless_range_loop)]
pub fn eval_spherical_direct(pair: &GelfandPair, xi: &[f64], x: &[f64]) -> Result<Complex64> {
    let n = pair.dimension();
    for v in [xi, x] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let group = pair.group();
    if group.is_finite() {
        let mut phases: Vec<f64> = group
            .nodes()
            .iter()
            .map(|k| {
                let mut terms = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let c = *k.get(i, j);
                        if c != 0.0 {
                            terms.push(c * (x[i] * xi[j]));
                        }
                    }
                }
                terms.sort_by(f64::total_cmp);
                terms.iter().sum()
            })
            .collect();
        phases.sort_by(f64::total_cmp);
        let (mut re, mut im) = (0.0, 0.0);
        for p in &phases {
            let (s, c) = p.sin_cos();
            re += c;
            im += s;
        }
        let len = phases.len() as f64;
        Ok(Complex64::new(re / len, im / len))
    } else {
        Ok(group.haar_average(|k| {
            let mut phase = 0.0;
            for i in 0..n {
                let mut kx = 0.0;
                for j in 0..n {
                    kx += k.get(i, j) * xi[j];
                }
                phase += x[i] * kx;
            }
            Complex64::new(0.0, phase).exp()
        }))
    }
}

/// `|phi_xi(x) - phi_x(xi)|`.
pub fn verify_symmetry(pair: &GelfandPair, xi: &[f64], x: &[f64]) -> Result<f64> {
    Ok((eval_spherical_direct(pair, xi, x)? - eval_spherical_direct(pair, x, xi)?).norm())
}

/// `lambda_j(xi) = i^deg(rho_j) rho_j(xi)`, with `j` counted from 0.
pub fn spherical_eigenvalue(pair: &GelfandPair, j: usize, xi: &[f64]) -> Result<Complex64> {
    let g = pair.generator(j)?;
    let v = g.eval_f64(xi)?;
    Ok(i_pow_f64(pair.degrees()[j]) * v)
}

/// Exact `lambda_j(xi)` at a rational point.
pub fn spherical_eigenvalue_exact(pair: &GelfandPair, j: usize, xi: &[Rational]) -> Result<GaussianRational> {
    let g = pair.generator(j)?;
    let v = g.eval(xi)?;
    Ok(i_pow(pair.degrees()[j]) * GaussianRational::from_rational(&v))
}

/// A spectrum label `lambda = rho(xi)` with its witness `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub lambda: Vec<f64>,
    pub witness_xi: Vec<f64>,
}

impl SpectrumPoint {
    pub fn of(pair: &GelfandPair, xi: &[f64]) -> Result<Self> {
        Ok(SpectrumPoint {
            lambda: pair.rho(xi)?,
            witness_xi: xi.to_vec(),
        })
    }

    /// `i^deg(rho_j) lambda_j` for every generator.
    pub fn eigenvalues(&self, pair: &GelfandPair) -> Vec<Complex64> {
        self.lambda
            .iter()
            .zip(pair.degrees())
            .map(|(l, &d)| i_pow_f64(d) * l)
            .collect()
    }
}

/// Exact generator-polynomial tables `b_I(t)` and `q_J(t)`.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pair: GelfandPair,
    max_degree: u32,
    b_table: BTreeMap<MultiIndex, Polynomial<GaussianRational>>,
    a_table: BTreeMap<MultiIndex, Polynomial<GaussianRational>>,
    /// `(J, graded degree, q_J)` in graded order, float coefficients.
    a_float: Vec<(MultiIndex, u32, Polynomial<Complex64>)>,
}

impl CoefficientTable {
    /// Builds both tables through graded degree `max_degree`.
    ///
    /// Degrees and monomials are processed in parallel; the first failure in
    /// `(m, I)` order is reported.
    pub fn build(pair: &GelfandPair, max_degree: u32) -> Result<Self> {
        let blocks: Vec<Result<DegreeBlock>> = (0..=max_degree)
            .into_par_iter()
            .map(|m| degree_block(pair, m))
            .collect();
        let mut b_table = BTreeMap::new();
        let mut a_table = BTreeMap::new();
        let mut a_float = Vec::new();
        for block in blocks {
            let block = block?;
            for (i, b) in block.b {
                b_table.insert(i, b);
            }
            for (j, a) in block.a {
                a_float.push((j.clone(), block.m, a.map_coeffs(Scalar::to_complex)));
                a_table.insert(j, a);
            }
        }
        Ok(CoefficientTable {
            pair: pair.clone(),
            max_degree,
            b_table,
            a_table,
            a_float,
        })
    }

    pub fn pair(&self) -> &GelfandPair {
        &self.pair
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `b_I(t)` for `|I| <= M`; `I!` times its value at `rho(xi)` is
    /// `(d^I phi_xi)(0)`.
    pub fn b(&self, i: &MultiIndex) -> Option<&Polynomial<GaussianRational>> {
        self.b_table.get(i)
    }

    /// `q_J(t)` for graded degree `<= M`.
    pub fn a(&self, j: &MultiIndex) -> Option<&Polynomial<GaussianRational>> {
        self.a_table.get(j)
    }

    /// `(I, b_I)` in graded-lex order of `I`.
    pub fn b_entries(&self) -> impl Iterator<Item = (&MultiIndex, &Polynomial<GaussianRational>)> {
        self.b_table.iter()
    }

    /// `(J, graded degree, q_J)` ordered by graded degree, then graded-lex.
    pub fn a_entries(&self) -> impl Iterator<Item = (&MultiIndex, u32, &Polynomial<GaussianRational>)> {
        self.a_float.iter().map(|(j, m, _)| (j, *m, &self.a_table[j]))
    }

    /// Float copies of `q_J`, in the order of [`a_entries`](Self::a_entries).
    pub fn a_float(&self) -> &[(MultiIndex, u32, Polynomial<Complex64>)] {
        &self.a_float
    }

    /// Exact `q_J(rho(xi))` at a rational point, graded order.
    pub fn h_terms_exact(&self, xi: &[Rational]) -> Result<Vec<(MultiIndex, GaussianRational)>> {
        let rho: Vec<GaussianRational> = self
            .pair
            .rho_exact(xi)?
            .iter()
            .map(GaussianRational::from_rational)
            .collect();
        self.a_entries()
            .map(|(j, _, q)| Ok((j.clone(), q.eval(&rho)?)))
            .collect()
    }

    /// Degree-`<= M` Taylor polynomial of `phi_xi` in `x`, with `xi`
    /// symbolic (variables `n..2n`) or fixed.
    pub fn taylor_polynomial(&self, point: &EigenPoint) -> Result<Polynomial<GaussianRational>> {
        let n = self.pair.dimension();
        let gens: Vec<Polynomial<GaussianRational>> = self.pair.generators_as();
        let (width, rho_point) = match point {
            EigenPoint::Symbolic => (2 * n, None),
            EigenPoint::Concrete(xi) => {
                let r = self.pair.rho_exact(xi)?;
                (
                    n,
                    Some(r.iter().map(GaussianRational::from_rational).collect::<Vec<_>>()),
                )
            }
        };
        let mut t = Polynomial::zero(width);
        for (i, b) in &self.b_table {
            match &rho_point {
                Some(r) => t.add_term(i.clone(), b.eval(r)?),
                None => {
                    for (k, c) in b.substitute(&gens)?.terms() {
                        t.add_term(i.concat(k), c.clone());
                    }
                }
            }
        }
        Ok(t)
    }
}

struct DegreeBlock {
    m: u32,
    b: Vec<(MultiIndex, Polynomial<GaussianRational>)>,
    a: Vec<(MultiIndex, Polynomial<GaussianRational>)>,
}

fn degree_block(pair: &GelfandPair, m: u32) -> Result<DegreeBlock> {
    let n = pair.dimension();
    let sys = pair.degree_system(m)?;
    let phase = i_pow(m);
    let rows = indices_of_degree(n, m);
    let b: Vec<Result<(MultiIndex, Polynomial<GaussianRational>)>> = rows
        .par_iter()
        .map(|i| {
            let mono = Polynomial::monomial(i.clone(), Rational::one());
            let r = pair.group().reynolds(&mono)?;
            let q = pair.express_invariant(&r).map_err(|e| match e {
                Error::NotExpressible { .. } => Error::IncompleteGenerators {
                    index: i.clone(),
                    degree: m,
                },
                other => other,
            })?;
            let scale = phase.clone()
                * GaussianRational::from_rational(&Rational::new(
                    One::one(),
                    num_bigint::BigInt::from(i.factorial()),
                ));
            Ok((
                i.clone(),
                q.map_coeffs(|c| GaussianRational::from_rational(c) * scale.clone()),
            ))
        })
        .collect();
    let b = b.into_iter().collect::<Result<Vec<_>>>()?;
    let rhs: Vec<Polynomial<GaussianRational>> = b.iter().map(|(_, p)| p.clone()).collect();
    let a = sys.apply_pseudo_inverse(&rhs);
    if !sys.cols().is_empty() || rhs.iter().any(|p| !p.is_zero()) {
        let back = sys.apply_matrix(&a);
        if back != rhs {
            return Err(Error::NotExpressible {
                degree: m,
                residual: "Taylor block is not in the column space of the expansion matrix".into(),
            });
        }
    }
    let a = sys.cols().iter().cloned().zip(a).collect();
    Ok(DegreeBlock { m, b, a })
}

/// `h_xi` truncated at graded degree `M` for a concrete `xi`.
#[derive(Clone, Debug)]
pub struct HSeries {
    xi: Vec<f64>,
    max_degree: u32,
    /// `(J, graded degree, q_J(rho(xi)))`, graded order.
    terms: Vec<(MultiIndex, u32, Complex64)>,
}

/// A series value with the magnitude of the last included graded band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub remainder: f64,
}

pub fn build_h_series(table: &CoefficientTable, xi: &[f64]) -> Result<HSeries> {
    let rho: Vec<Complex64> = table.pair.rho(xi)?.into_iter().map(Complex64::from).collect();
    let terms = table
        .a_float
        .iter()
        .map(|(j, m, q)| Ok((j.clone(), *m, q.eval_complex(&rho)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HSeries {
        xi: xi.to_vec(),
        max_degree: table.max_degree,
        terms,
    })
}

impl HSeries {
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn terms(&self) -> &[(MultiIndex, u32, Complex64)] {
        &self.terms
    }

    pub fn term(&self, j: &MultiIndex) -> Option<Complex64> {
        self.terms.iter().find(|(k, _, _)| k == j).map(|t| t.2)
    }

    pub fn to_json(&self) -> HSeriesJson {
        HSeriesJson {
            xi: self.xi.clone(),
            max_degree: self.max_degree,
            terms: self
                .terms
                .iter()
                .map(|(j, _, c)| HTermJson {
                    j: j.exponents().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

/// `sum_J c_J t^J` with the last nonempty graded band's mass as remainder proxy.
pub fn eval_series_terms(terms: &[(MultiIndex, u32, Complex64)], t: &[f64]) -> Result<SeriesValue> {
    let mut value = Complex64::zero();
    let mut band = (0u32, 0.0f64);
    for (j, m, c) in terms {
        if j.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: j.len(),
                found: t.len(),
            });
        }
        let mono: f64 = j
            .exponents()
            .iter()
            .zip(t)
            .map(|(&e, &v)| v.powi(e as i32))
            .product();
        let term = c * mono;
        value += term;
        if *m != band.0 {
            band = (*m, 0.0);
        }
        band.1 += term.norm();
    }
    Ok(SeriesValue {
        value,
        remainder: band.1,
    })
}

pub fn eval_h_series(h: &HSeries, t: &[f64]) -> Result<SeriesValue> {
    eval_series_terms(&h.terms, t)
}

/// HSeries JSON: `{ "xi": [...], "M": int, "terms": [ {"J": [...], "re", "im"} ] }`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HSeriesJson {
    pub xi: Vec<f64>,
    #[serde(rename = "M")]
    pub max_degree: u32,
    pub terms: Vec<HTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HTermJson {
    #[serde(rename = "J")]
    pub j: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// Where `xi` lives in an eigenfunction check.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenPoint {
    Symbolic,
    Concrete(Vec<Rational>),
}

/// Applies `D_j = rho_j(d/dx)` to the truncated Taylor polynomial of
/// `phi_xi` and subtracts `lambda_j(xi)` times the same polynomial.
/// Returns the largest coefficient magnitude (max of `|re|`, `|im|`) of the
/// difference in `x`-degrees `<= M - deg(rho_j)`.
pub fn verify_eigenfunction(table: &CoefficientTable, point: &EigenPoint, j: usize) -> Result<Rational> {
    let pair = &table.pair;
    let g = pair.generator(j)?;
    let d = pair.degrees()[j];
    if table.max_degree < d {
        return Err(Error::InsufficientDepth {
            depth: table.max_degree,
            required: d,
        });
    }
    let n = pair.dimension();
    if let EigenPoint::Concrete(xi) = point {
        if xi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: xi.len(),
            });
        }
    }
    let taylor = table.taylor_polynomial(point)?;
    let width = taylor.n_vars();
    let extra = MultiIndex::zero(width - n);
    let gg: Polynomial<GaussianRational> = g.map_coeffs(GaussianRational::from_rational);
    let mut op = Polynomial::zero(width);
    for (k, c) in gg.terms() {
        op.add_term(k.concat(&extra), c.clone());
    }
    let lambda: Polynomial<GaussianRational> = match point {
        EigenPoint::Symbolic => {
            let mut l = Polynomial::zero(width);
            for (k, c) in gg.terms() {
                l.add_term(MultiIndex::zero(n).concat(k), c.clone() * i_pow(d));
            }
            l
        }
        EigenPoint::Concrete(xi) => Polynomial::constant(width, spherical_eigenvalue_exact(pair, j, xi)?),
    };
    let lhs = taylor.apply_operator(&op)?;
    let rhs = lambda.mul(&taylor)?;
    let limit = table.max_degree - d;
    let diff = lhs.sub(&rhs)?.filter_terms(|k| k.split_at(n).0.degree() <= limit);
    let mut worst = Rational::zero();
    for (_, c) in diff.terms() {
        for part in [c.re.abs(), c.im.abs()] {
            if part > worst {
                worst = part;
            }
        }
    }
    Ok(worst)
}

/// Closed-form `q_J(rho(xi)) = lambda(xi)^J / (D^J rho^J)(0)`, valid when the
/// special assumption holds through the graded degree of `J`.
pub fn special_case_a_exact(pair: &GelfandPair, j: &MultiIndex, xi: &[Rational]) -> Result<GaussianRational> {
    let denom = special_case_denominator(pair, j)?;
    let mut num = GaussianRational::one();
    for (k, &e) in j.exponents().iter().enumerate() {
        let l = spherical_eigenvalue_exact(pair, k, xi)?;
        for _ in 0..e {
            num *= l.clone();
        }
    }
    Ok(num / GaussianRational::from_rational(&denom))
}

/// Float version of [`special_case_a_exact`].
pub fn special_case_a(pair: &GelfandPair, j: &MultiIndex, xi: &[f64]) -> Result<Complex64> {
    let denom = special_case_denominator(pair, j)?;
    let mut num = Complex64::one();
    for (k, &e) in j.exponents().iter().enumerate() {
        num *= spherical_eigenvalue(pair, k, xi)?.powu(e);
    }
    Ok(num / crate::poly::rational_to_f64(&denom))
}

fn special_case_denominator(pair: &GelfandPair, j: &MultiIndex) -> Result<Rational> {
    let m = pair.graded_degree(j)?;
    if let SpecialAssumption::Fails { j, j_prime, value } = pair.check_special_assumption(m)? {
        return Err(Error::SpecialAssumptionFails {
            j,
            j_prime,
            value: crate::poly::format_rational(&value),
        });
    }
    pair.pairing(j, j)
}

/// Graded indices up to `M` for the pair, in graded order.
pub fn graded_indices(pair: &GelfandPair, max_degree: u32) -> Vec<MultiIndex> {
    enumerate_graded_up_to(max_degree, pair.degrees())
}

/// `Complex<Rational>` from a real rational.
pub fn real(r: Rational) -> GaussianRational {
    Complex::new(r, Rational::zero())
}
