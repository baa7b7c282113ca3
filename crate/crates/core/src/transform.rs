//! Classical and spherical Fourier transforms on tensor Gauss-Legendre boxes.
//!
//! Conventions: `f^(xi) = ∫ f(x) e^{-i<x,xi>} dx`, inverse
//! `f(x) = (2π)^{-n} ∫ f^(xi) e^{i<x,xi>} dxi`, spherical transform
//! `∫ f(x) phi_xi(-x) dx`. The global `h(t) = (2π)^{-n} ∫ f^(xi) h_xi(t) dxi`
//! carries the same `(2π)^{-n}` as the inversion formula.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::CompactGroup;
use crate::invariant::GelfandPair;
use crate::poly::{i_pow_f64, indices_up_to_degree, rational_to_f64, MultiIndex, Polynomial, Rational};
use crate::spherical::{eval_series_terms, eval_spherical_direct, CoefficientTable, SeriesValue};

const AUDIT_TOL: f64 = 1e-12;
const CHUNK: usize = 256;

type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A function on `R^n` with declared support.
#[derive(Clone)]
pub struct InvariantFunction {
    name: String,
    n: usize,
    support: Option<f64>,
    eval: Evaluator,
}

impl fmt::Debug for InvariantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantFunction")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("support", &self.support)
            .finish()
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `exp(-1 / (1 - s))` for `s < 1`, else 0.
fn bump_profile(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

impl InvariantFunction {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        support: Option<f64>,
        eval: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        InvariantFunction {
            name: name.into(),
            n,
            support,
            eval: Arc::new(eval),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::new("zero", n, Some(0.0), |_| Complex64::zero())
    }

    /// Radial bump `exp(-1 / (1 - |x/r|^2))` supported in the ball of radius `r`.
    pub fn bump(n: usize, radius: f64) -> Self {
        Self::new("bump", n, Some(radius), move |x| {
            Complex64::new(bump_profile(norm_sq(x) / (radius * radius)), 0.0)
        })
    }

    /// Even, non-radial bump `bump(x) (1 + x1 x2 / 2 + x1^2 / 4)` (`n >= 2`).
    pub fn even_bump(n: usize, radius: f64) -> Self {
        Self::new("even-bump", n, Some(radius), move |x| {
            let s = norm_sq(x) / (radius * radius);
            let (a, b) = (x[0] / radius, x.get(1).copied().unwrap_or(0.0) / radius);
            Complex64::new(bump_profile(s) * (1.0 + 0.5 * a * b + 0.25 * a * a), 0.0)
        })
    }

    /// `exp(-|x|^2 / 2)`, unbounded support.
    pub fn gaussian(n: usize) -> Self {
        Self::new("gaussian", n, None, |x| {
            Complex64::new((-0.5 * norm_sq(x)).exp(), 0.0)
        })
    }

    /// Selects a built-in test function by name.
    pub fn by_name(name: &str, n: usize, radius: f64) -> Result<Self> {
        match name {
            "bump" => Ok(Self::bump(n, radius)),
            "even-bump" if n >= 2 => Ok(Self::even_bump(n, radius)),
            "gaussian" => Ok(Self::gaussian(n)),
            "zero" => Ok(Self::zero(n)),
            other => Err(Error::InvalidParameter(format!(
                "unknown test function {other:?}"
            ))),
        }
    }

    /// `c f`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let inner = self.eval.clone();
        Self::new(format!("{c}*{}", self.name), self.n, self.support, move |x| {
            c * inner(x)
        })
    }

    /// Zero outside the ball of radius `r`, support declared as `r`.
    pub fn truncated(&self, r: f64) -> Self {
        let inner = self.eval.clone();
        let support = Some(self.support.map_or(r, |s| s.min(r)));
        Self::new(format!("{}|{r}", self.name), self.n, support, move |x| {
            if norm_sq(x) <= r * r {
                inner(x)
            } else {
                Complex64::zero()
            }
        })
    }

    /// `x -> f(-x)`.
    pub fn reflected(&self) -> Self {
        let inner = self.eval.clone();
        Self::new(format!("{}(-x)", self.name), self.n, self.support, move |x| {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            inner(&neg)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Support radius; `None` when unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        self.support
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.eval)(x)
    }

    /// Checks `|f(k x) - f(x)| <= 1e-12` on a fixed audit set.
    pub fn audit(&self, group: &CompactGroup) -> Result<()> {
        if group.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                expected: group.dimension(),
                found: self.n,
            });
        }
        let scale = self.support.unwrap_or(2.0).max(1e-3);
        let base = [
            [0.31, -0.17, 0.22],
            [-0.45, 0.52, -0.11],
            [0.08, 0.63, 0.27],
            [0.58, 0.21, -0.36],
        ];
        for b in base {
            let x: Vec<f64> = b[..self.n].iter().map(|v| v * scale).collect();
            let fx = self.eval(&x);
            for k in group.audit_elements() {
                let kx = k.mul_vec(&x)?;
                let d = (self.eval(&kx) - fx).norm();
                if d > AUDIT_TOL {
                    return Err(Error::InvarianceAudit { defect: d, x });
                }
            }
        }
        Ok(())
    }
}

/// Tensor Gauss-Legendre rule on `[-R, R]^n`, `n <= 3`.
#[derive(Clone, Debug)]
pub struct BoxQuadrature {
    half_width: f64,
    nodes_per_axis: usize,
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl BoxQuadrature {
    pub fn new(n: usize, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::QuadratureDimension(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter("box half-width must be positive".into()));
        }
        if !(2..=1024).contains(&nodes_per_axis) {
            return Err(Error::InvalidParameter(
                "nodes per axis must be in 2..=1024".into(),
            ));
        }
        let (x1, w1) = symmetric_gauss_legendre(nodes_per_axis)?;
        check_exactness(&x1, &w1)?;
        let total = nodes_per_axis.pow(n as u32);
        let mut points = Vec::with_capacity(total * n);
        let mut weights = Vec::with_capacity(total);
        for code in 0..total {
            let mut c = code;
            let mut w = 1.0;
            let mut p = [0.0; 3];
            for slot in p.iter_mut().take(n).rev() {
                let k = c % nodes_per_axis;
                c /= nodes_per_axis;
                *slot = x1[k] * half_width;
                w *= w1[k] * half_width;
            }
            points.extend_from_slice(&p[..n]);
            weights.push(w);
        }
        Ok(BoxQuadrature {
            half_width,
            nodes_per_axis,
            n,
            points,
            weights,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Polynomial degree integrated exactly along each axis.
    pub fn rule_degree(&self) -> usize {
        2 * self.nodes_per_axis - 1
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.n..(k + 1) * self.n]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// The same box with twice the nodes per axis.
    pub fn doubled(&self) -> Result<Self> {
        Self::new(self.n, self.half_width, 2 * self.nodes_per_axis)
    }

    /// `sum_k w_k g(x_k)`; chunks run in parallel, partial sums are added in
    /// node order.
    pub fn integrate<F>(&self, g: F) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let partials: Vec<Complex64> = (0..self.len())
            .into_par_iter()
            .chunks(CHUNK)
            .map(|ks| {
                ks.into_iter()
                    .map(|k| self.weights[k] * g(self.point(k)))
                    .fold(Complex64::zero(), |a, b| a + b)
            })
            .collect();
        partials.into_iter().fold(Complex64::zero(), |a, b| a + b)
    }

    pub fn budget(&self) -> QuadBudget {
        QuadBudget {
            radius: self.half_width,
            nodes: self.nodes_per_axis,
            rule_degree: self.rule_degree(),
        }
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }

    fn covers(&self, f: &InvariantFunction) -> Result<()> {
        match f.support_radius() {
            Some(r) if r <= self.half_width => Ok(()),
            Some(r) => Err(Error::SupportViolation {
                support: r,
                half_width: self.half_width,
            }),
            None => Err(Error::SupportViolation {
                support: f64::INFINITY,
                half_width: self.half_width,
            }),
        }
    }
}

/// Gauss-Legendre nodes on `[-1, 1]`, sorted and symmetrized about 0.
fn symmetric_gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussLegendre::new(n).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut pairs = rule.into_node_weight_pairs();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x = (0..n).map(|k| 0.5 * (pairs[k].0 - pairs[n - 1 - k].0)).collect();
    let w = (0..n).map(|k| 0.5 * (pairs[k].1 + pairs[n - 1 - k].1)).collect();
    Ok((x, w))
}

fn check_exactness(x: &[f64], w: &[f64]) -> Result<()> {
    if w.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("non-positive quadrature weight".into()));
    }
    let n = x.len();
    for j in 0..n {
        let e = 2 * j as i32;
        let got: f64 = x.iter().zip(w).map(|(a, b)| b * a.powi(e)).sum();
        let want = 2.0 / (e as f64 + 1.0);
        if (got - want).abs() > 1e-12 * want.max(1.0) + 1e-14 * n as f64 {
            return Err(Error::InvalidParameter(format!(
                "quadrature fails exactness on x^{e}: {got} vs {want}"
            )));
        }
    }
    Ok(())
}

/// Quadrature parameters recorded alongside results.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadBudget {
    #[serde(rename = "R")]
    pub radius: f64,
    pub nodes: usize,
    pub rule_degree: usize,
}

/// Warning text when `f` is not contained in the box, with the largest `|f|`
/// over boundary nodes as a truncation indicator.
pub fn truncation_warning(f: &InvariantFunction, quad: &BoxQuadrature) -> Option<String> {
    if quad.covers(f).is_ok() {
        return None;
    }
    let edge = quad.half_width * (1.0 - 1e-9);
    let mut worst = 0.0f64;
    for k in 0..quad.len() {
        let p = quad.point(k);
        if p.iter().any(|v| v.abs() >= 0.95 * edge) {
            worst = worst.max(f.eval(p).norm());
        }
    }
    Some(format!(
        "support of {} exceeds box half-width {}; |f| near the boundary reaches {worst:e}",
        f.name(),
        quad.half_width
    ))
}

/// `f^(xi)` by quadrature.
pub fn fourier_forward(f: &InvariantFunction, quad: &BoxQuadrature, xi: &[f64]) -> Result<Complex64> {
    quad.check_dimension(f.dimension())?;
    quad.check_dimension(xi.len())?;
    Ok(quad.integrate(|x| f.eval(x) * Complex64::new(0.0, -dot(x, xi)).exp()))
}

/// `(2π)^{-n} ∫ f^(xi) e^{i<x,xi>} dxi`; `fhat` must be supported in the box.
pub fn fourier_inverse(fhat: &InvariantFunction, quad: &BoxQuadrature, x: &[f64]) -> Result<Complex64> {
    quad.check_dimension(fhat.dimension())?;
    quad.check_dimension(x.len())?;
    quad.covers(fhat)?;
    let norm = (2.0 * PI).powi(-(quad.n as i32));
    Ok(norm * quad.integrate(|xi| fhat.eval(xi) * Complex64::new(0.0, dot(x, xi)).exp()))
}

/// `∫ f(x) phi_xi(-x) dx` after auditing the invariance of `f`.
pub fn gelfand_transform(
    pair: &GelfandPair,
    f: &InvariantFunction,
    quad: &BoxQuadrature,
    xi: &[f64],
) -> Result<Complex64> {
    quad.check_dimension(f.dimension())?;
    quad.check_dimension(xi.len())?;
    f.audit(pair.group())?;
    let values: Vec<Result<Complex64>> = (0..quad.len())
        .into_par_iter()
        .map(|k| {
            let x = quad.point(k);
            let fx = f.eval(x);
            if fx == Complex64::zero() {
                return Ok(fx);
            }
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            Ok(quad.weight(k) * fx * eval_spherical_direct(pair, xi, &neg)?)
        })
        .collect();
    let mut acc = Complex64::zero();
    for v in values {
        acc += v?;
    }
    Ok(acc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Controls for [`build_h_global`].
#[derive(Clone, Copy, Debug)]
pub struct HOptions {
    /// Radius of the `x`-ball on which `h(rho(x))` will be used.
    pub target_radius: f64,
    /// Largest tolerated change when `M` is doubled.
    pub tol: f64,
    /// Also recompute with twice the nodes per axis.
    pub check_nodes: bool,
}

impl Default for HOptions {
    fn default() -> Self {
        HOptions {
            target_radius: 3.0,
            tol: 1e-8,
            check_nodes: true,
        }
    }
}

/// `h(t) = sum_J c_J t^J`, precomputed from a density on the quadrature box.
#[derive(Clone, Debug)]
pub struct HGlobal {
    coeffs: Vec<(MultiIndex, u32, Complex64)>,
    max_degree: u32,
    budget: QuadBudget,
    /// `max |h_M - h_2M|` over the check points.
    pub degree_delta: Option<f64>,
    /// `max |h_N - h_2N|` over the check points (nodes per axis).
    pub node_delta: Option<f64>,
}

impl HGlobal {
    pub fn eval(&self, t: &[f64]) -> Result<SeriesValue> {
        eval_series_terms(&self.coeffs, t)
    }

    pub fn coefficients(&self) -> &[(MultiIndex, u32, Complex64)] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn budget(&self) -> QuadBudget {
        self.budget
    }
}

/// `c_J = scale * sum_k w_k density(xi_k) q_J(rho(xi_k))`.
fn h_coefficients(
    table: &CoefficientTable,
    quad: &BoxQuadrature,
    density: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    scale: f64,
) -> Result<Vec<(MultiIndex, u32, Complex64)>> {
    let pair = table.pair();
    let a = table.a_float();
    let partials: Vec<Result<Vec<Complex64>>> = (0..quad.len())
        .into_par_iter()
        .chunks(CHUNK)
        .map(|ks| {
            let mut acc = vec![Complex64::zero(); a.len()];
            for k in ks {
                let xi = quad.point(k);
                let d = density(xi);
                if d == Complex64::zero() {
                    continue;
                }
                let wd = quad.weight(k) * d;
                let rho: Vec<Complex64> = pair.rho(xi)?.into_iter().map(Complex64::from).collect();
                for (slot, (_, _, q)) in acc.iter_mut().zip(a) {
                    *slot += wd * q.eval_complex(&rho)?;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Complex64::zero(); a.len()];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    Ok(a.iter()
        .zip(total)
        .map(|((j, m, _), c)| (j.clone(), *m, scale * c))
        .collect())
}

/// Builds `h = (2π)^{-n} ∫ f^(xi) h_xi dxi` and runs the doubling checks:
/// `M -> 2M` must move `h(rho(x))` by at most `opts.tol` on check points with
/// `|x| <= opts.target_radius`; the node-doubling delta is recorded.
pub fn build_h_global(
    table: &CoefficientTable,
    fhat: &InvariantFunction,
    quad: &BoxQuadrature,
    opts: &HOptions,
) -> Result<HGlobal> {
    let n = table.pair().dimension();
    quad.check_dimension(n)?;
    quad.check_dimension(fhat.dimension())?;
    quad.covers(fhat)?;
    let scale = (2.0 * PI).powi(-(n as i32));
    let density = |xi: &[f64]| fhat.eval(xi);
    let coeffs = h_coefficients(table, quad, &density, scale)?;
    let mut h = HGlobal {
        coeffs,
        max_degree: table.max_degree(),
        budget: quad.budget(),
        degree_delta: None,
        node_delta: None,
    };
    if fhat.support_radius() == Some(0.0) {
        h.degree_delta = Some(0.0);
        h.node_delta = Some(0.0);
        return Ok(h);
    }
    let points = check_points(n, opts.target_radius);
    let ts: Vec<Vec<f64>> = points
        .iter()
        .map(|x| table.pair().rho(x))
        .collect::<Result<_>>()?;
    let base: Vec<Complex64> = ts
        .iter()
        .map(|t| h.eval(t).map(|v| v.value))
        .collect::<Result<_>>()?;
    let max_delta = |other: &[Complex64]| {
        base.iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    };
    let doubled = MomentRoute::new(table.pair(), 2 * table.max_degree())?;
    let vals = doubled.h_values(quad, &density, scale, &points)?;
    let dm = max_delta(&vals);
    h.degree_delta = Some(dm);
    if opts.check_nodes {
        let same = MomentRoute::new(table.pair(), table.max_degree())?;
        let vals = same.h_values(&quad.doubled()?, &density, scale, &points)?;
        h.node_delta = Some(max_delta(&vals));
    }
    if dm.is_nan() || dm > opts.tol {
        return Err(Error::UnstableTruncation {
            delta: dm,
            tol: opts.tol,
        });
    }
    Ok(h)
}

/// Deterministic check points in the ball of radius `r`: the origin, points
/// on the axes and diagonals, and interior points.
pub fn check_points(n: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    for frac in [0.5, 1.0] {
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = frac * r;
            out.push(e);
        }
        let d = frac * r / (n as f64).sqrt();
        out.push(vec![d; n]);
        let mut alt = vec![d; n];
        alt[0] = -d;
        out.push(alt);
    }
    let golden = 0.618_033_988_749_895;
    for j in 1..=6 {
        let rad = r * (j as f64 / 6.0).sqrt() * 0.97;
        let x: Vec<f64> = (0..n)
            .map(|k| ((j * (k + 2)) as f64 * golden * 2.0 * PI).cos())
            .collect();
        let len = norm_sq(&x).sqrt().max(1e-12);
        out.push(x.iter().map(|v| v * rad / len).collect());
    }
    out
}

type MomentBlock = (Vec<MultiIndex>, Vec<MultiIndex>, Vec<Vec<f64>>);

/// Second evaluation route for `h`: integrate the Taylor moments
/// `B_I = scale ∫ density(xi) i^|I| / I! R(x^I)(xi) dxi` and map them through
/// float pseudo-inverses, `c = A^+ B` per degree. Used for the doubling checks.
pub struct MomentRoute {
    pair: GelfandPair,
    max_degree: u32,
    /// Per degree: x-monomials, generator indices, float `A^+` (rows J, cols I).
    blocks: Vec<MomentBlock>,
    /// `R(x^I) = scale * basis[slot]` for every `|I| <= max_degree`; `None` when zero.
    reynolds: Vec<(MultiIndex, Option<(usize, f64)>)>,
    basis: Vec<Polynomial<f64>>,
}

impl MomentRoute {
    pub fn new(pair: &GelfandPair, max_degree: u32) -> Result<Self> {
        let systems: Vec<Result<_>> = (0..=max_degree)
            .into_par_iter()
            .map(|m| {
                let sys = pair.degree_system(m)?;
                let p = sys.pseudo_inverse();
                let mat: Vec<Vec<f64>> = (0..p.rows())
                    .map(|r| p.row(r).iter().map(rational_to_f64).collect())
                    .collect();
                Ok((sys.rows().to_vec(), sys.cols().to_vec(), mat))
            })
            .collect();
        let blocks = systems.into_iter().collect::<Result<Vec<_>>>()?;
        let idx = indices_up_to_degree(pair.dimension(), max_degree);
        let images: Vec<Result<_>> = idx
            .into_par_iter()
            .map(|i| {
                let r = pair
                    .group()
                    .reynolds(&Polynomial::monomial(i.clone(), Rational::from_integer(1.into())))?;
                Ok((i, r))
            })
            .collect();
        let mut slots: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        let mut basis = Vec::new();
        let mut reynolds = Vec::new();
        for item in images {
            let (i, r) = item?;
            let lead = match r.terms().next() {
                Some((_, c)) => c.clone(),
                None => {
                    reynolds.push((i, None));
                    continue;
                }
            };
            let normalized = r.scale(&(Rational::from_integer(1.into()) / &lead));
            let slot = *slots.entry(normalized.to_json_string()).or_insert_with(|| {
                basis.push(normalized.map_coeffs(rational_to_f64));
                basis.len() - 1
            });
            reynolds.push((i, Some((slot, rational_to_f64(&lead)))));
        }
        Ok(MomentRoute {
            pair: pair.clone(),
            max_degree,
            blocks,
            reynolds,
            basis,
        })
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Series coefficients `(J, m, c_J)` in graded order.
    pub fn coefficients(
        &self,
        quad: &BoxQuadrature,
        density: &(dyn Fn(&[f64]) -> Complex64 + Sync),
        scale: f64,
    ) -> Result<Vec<(MultiIndex, u32, Complex64)>> {
        let len = self.basis.len();
        let partials: Vec<Result<Vec<Complex64>>> = (0..quad.len())
            .into_par_iter()
            .chunks(CHUNK)
            .map(|ks| {
                let mut acc = vec![Complex64::zero(); len];
                for k in ks {
                    let xi = quad.point(k);
                    let d = density(xi);
                    if d == Complex64::zero() {
                        continue;
                    }
                    let wd = quad.weight(k) * d;
                    for (slot, r) in acc.iter_mut().zip(&self.basis) {
                        *slot += wd * r.eval(xi)?;
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut moments = vec![Complex64::zero(); len];
        for p in partials {
            for (t, v) in moments.iter_mut().zip(p?) {
                *t += v;
            }
        }
        let by_index: std::collections::HashMap<&MultiIndex, Complex64> = self
            .reynolds
            .iter()
            .map(|(i, image)| {
                let b = match image {
                    Some((slot, c)) => *c * moments[*slot],
                    None => Complex64::zero(),
                };
                let f = rational_to_f64(&Rational::from_integer(i.factorial().into()));
                (i, scale * i_pow_f64(i.degree()) * b / f)
            })
            .collect();
        let mut out = Vec::new();
        for (m, (rows, cols, pinv)) in self.blocks.iter().enumerate() {
            for (c, j) in cols.iter().enumerate() {
                let v: Complex64 = rows
                    .iter()
                    .zip(&pinv[c])
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(i, p)| *p * by_index[i])
                    .sum();
                out.push((j.clone(), m as u32, v));
            }
        }
        Ok(out)
    }

    fn h_values(
        &self,
        quad: &BoxQuadrature,
        density: &(dyn Fn(&[f64]) -> Complex64 + Sync),
        scale: f64,
        points: &[Vec<f64>],
    ) -> Result<Vec<Complex64>> {
        let c = self.coefficients(quad, density, scale)?;
        points
            .iter()
            .map(|x| Ok(eval_series_terms(&c, &self.pair.rho(x)?)?.value))
            .collect()
    }
}

/// One row of a Schwarz report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SchwarzPoint {
    pub x: Vec<f64>,
    pub f: [f64; 2],
    pub h_rho: [f64; 2],
    pub err: f64,
}

/// Comparison of `f(x)` (inverse transform) with `h(rho(x))`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SchwarzReport {
    pub pair: String,
    #[serde(rename = "M")]
    pub max_degree: u32,
    pub quad: QuadBudget,
    pub max_abs_error: f64,
    pub max_abs_f: f64,
    pub degree_delta: Option<f64>,
    pub node_delta: Option<f64>,
    pub points: Vec<SchwarzPoint>,
}

/// `|fourier_inverse(fhat, x) - h(rho(x))|` for every test point.
pub fn verify_schwarz(
    pair_name: &str,
    table: &CoefficientTable,
    fhat: &InvariantFunction,
    quad: &BoxQuadrature,
    test_points: &[Vec<f64>],
    opts: &HOptions,
) -> Result<SchwarzReport> {
    fhat.audit(table.pair().group())?;
    let h = build_h_global(table, fhat, quad, opts)?;
    let mut points = Vec::with_capacity(test_points.len());
    let mut max_err = 0.0f64;
    let mut max_f = 0.0f64;
    for x in test_points {
        let f = fourier_inverse(fhat, quad, x)?;
        let hr = h.eval(&table.pair().rho(x)?)?.value;
        let err = (f - hr).norm();
        max_err = max_err.max(err);
        max_f = max_f.max(f.norm());
        points.push(SchwarzPoint {
            x: x.clone(),
            f: [f.re, f.im],
            h_rho: [hr.re, hr.im],
            err,
        });
    }
    Ok(SchwarzReport {
        pair: pair_name.to_string(),
        max_degree: table.max_degree(),
        quad: quad.budget(),
        max_abs_error: max_err,
        max_abs_f: max_f,
        degree_delta: h.degree_delta,
        node_delta: h.node_delta,
        points,
    })
}

/// `h(t) = ∫ g(-xi) h_xi(t) dxi`, plain Lebesgue measure; then
/// `h(rho(xi))` should equal the spherical transform of `g` at `xi`.
pub fn corollary_h_from_g(
    table: &CoefficientTable,
    g: &InvariantFunction,
    quad: &BoxQuadrature,
    opts: &HOptions,
) -> Result<HGlobal> {
    g.audit(table.pair().group())?;
    build_h_global_scaled(table, &g.reflected(), quad, opts, 1.0)
}

fn build_h_global_scaled(
    table: &CoefficientTable,
    density_fn: &InvariantFunction,
    quad: &BoxQuadrature,
    opts: &HOptions,
    scale: f64,
) -> Result<HGlobal> {
    let n = table.pair().dimension();
    let norm = (2.0 * PI).powi(n as i32) * scale;
    // build_h_global applies (2π)^{-n}; undo it by rescaling the density
    let rescaled = density_fn.scaled(Complex64::new(norm, 0.0));
    build_h_global(table, &rescaled, quad, opts)
}

/// Sample points in the ball of radius `r`, reproducible from `seed`.
pub fn ball_points(n: usize, r: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-r..=r)).collect();
        if norm_sq(&x) <= r * r {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;

    #[test]
    fn quadrature_construction() {
        let q = BoxQuadrature::new(2, 1.5, 8).unwrap();
        assert_eq!(q.len(), 64);
        assert_eq!(q.rule_degree(), 15);
        let area = q.integrate(|_| Complex64::new(1.0, 0.0));
        assert!((area.re - 9.0).abs() < 1e-13);
        // symmetric nodes
        for k in 0..q.len() {
            let p = q.point(k);
            let mirror = q.point(q.len() - 1 - k);
            assert_eq!(p[0], -mirror[0]);
            assert_eq!(p[1], -mirror[1]);
        }
        assert!(matches!(
            BoxQuadrature::new(4, 1.0, 4),
            Err(Error::QuadratureDimension(4))
        ));
        assert!(BoxQuadrature::new(2, -1.0, 4).is_err());
        assert!(BoxQuadrature::new(2, 1.0, 1).is_err());
    }

    #[test]
    fn gaussian_forward_examples() {
        let q = BoxQuadrature::new(2, 10.0, 64).unwrap();
        let g = InvariantFunction::gaussian(2);
        let v = fourier_forward(&g, &q, &[0.0, 0.0]).unwrap();
        assert!((v - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-8);
        let v = fourier_forward(&g, &q, &[1.0, 0.0]).unwrap();
        assert!((v - Complex64::new(2.0 * PI * (-0.5f64).exp(), 0.0)).norm() < 1e-8);
        assert!(truncation_warning(&g, &q).is_some());
    }

    #[test]
    fn inverse_examples() {
        let q = BoxQuadrature::new(2, 8.0, 64).unwrap();
        let fhat = InvariantFunction::gaussian(2)
            .scaled(Complex64::new(2.0 * PI, 0.0))
            .truncated(8.0);
        let v = fourier_inverse(&fhat, &q, &[0.0, 0.0]).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        assert_eq!(
            fourier_inverse(&InvariantFunction::zero(2), &q, &[1.0, 2.0]).unwrap(),
            Complex64::zero()
        );
        assert!(matches!(
            fourier_inverse(&InvariantFunction::gaussian(2), &q, &[0.0, 0.0]),
            Err(Error::SupportViolation { .. })
        ));
        assert!(matches!(
            fourier_inverse(&InvariantFunction::bump(2, 9.0), &q, &[0.0, 0.0]),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn round_trip_on_bump() {
        // fhat = forward(bump) decays like exp(-sqrt(2|xi|)); truncating at 200
        // leaves a tail below 1e-7
        let narrow = BoxQuadrature::new(1, 1.0, 400).unwrap();
        let f = InvariantFunction::bump(1, 1.0);
        let fc = f.clone();
        let fhat = InvariantFunction::new("fwd", 1, None, move |xi| {
            fourier_forward(&fc, &narrow, xi).unwrap()
        })
        .truncated(200.0);
        let wide = BoxQuadrature::new(1, 200.0, 800).unwrap();
        for x in [0.0, 0.3, -0.55, 0.8] {
            let back = fourier_inverse(&fhat, &wide, &[x]).unwrap();
            assert!((back - f.eval(&[x])).norm() < 1e-6, "{x}: {back}");
        }
    }

    #[test]
    fn gelfand_matches_classical() {
        let z2 = builtin("z2-r2").unwrap();
        let q = BoxQuadrature::new(2, 9.0, 64).unwrap();
        let g = InvariantFunction::gaussian(2);
        let xi = [1.0, 1.0];
        let a = gelfand_transform(&z2, &g, &q, &xi).unwrap();
        let b = fourier_forward(&g, &q, &xi).unwrap();
        assert!((a - b).norm() < 1e-8);
        let zero = gelfand_transform(&z2, &InvariantFunction::zero(2), &q, &xi).unwrap();
        assert_eq!(zero, Complex64::zero());

        let so2 = builtin("so2").unwrap();
        let q = BoxQuadrature::new(2, 9.0, 48).unwrap();
        let v = gelfand_transform(&so2, &g, &q, &[0.6, 0.8]).unwrap();
        assert!((v - Complex64::new(2.0 * PI * (-0.5f64).exp(), 0.0)).norm() < 1e-6);
    }

    #[test]
    fn audit_rejects_non_invariant() {
        let so2 = builtin("so2").unwrap();
        let q = BoxQuadrature::new(2, 1.0, 8).unwrap();
        let f = InvariantFunction::even_bump(2, 1.0);
        assert!(matches!(
            gelfand_transform(&so2, &f, &q, &[0.0, 1.0]),
            Err(Error::InvarianceAudit { .. })
        ));
        assert!(f.audit(builtin("z2-r2").unwrap().group()).is_ok());
    }

    #[test]
    fn trivial_pair_h_is_inverse_transform() {
        let pair = builtin("trivial").unwrap();
        let table = CoefficientTable::build(&pair, 30).unwrap();
        let q = BoxQuadrature::new(2, 1.0, 32).unwrap();
        let fhat = InvariantFunction::even_bump(2, 1.0);
        let h = build_h_global(
            &table,
            &fhat,
            &q,
            &HOptions {
                target_radius: 2.0,
                ..HOptions::default()
            },
        )
        .unwrap();
        for x in ball_points(2, 2.0, 10, 7) {
            let f = fourier_inverse(&fhat, &q, &x).unwrap();
            assert!((h.eval(&x).unwrap().value - f).norm() < 1e-6);
        }
        let zero = build_h_global(&table, &InvariantFunction::zero(2), &q, &HOptions::default()).unwrap();
        assert_eq!(zero.eval(&[0.3, 0.1]).unwrap().value, Complex64::zero());
    }

    #[test]
    fn schwarz_at_origin_is_tight() {
        let pair = builtin("z2-r2").unwrap();
        let table = CoefficientTable::build(&pair, 12).unwrap();
        let q = BoxQuadrature::new(2, 1.0, 24).unwrap();
        let fhat = InvariantFunction::even_bump(2, 1.0);
        let rep = verify_schwarz(
            "z2-r2",
            &table,
            &fhat,
            &q,
            &[vec![0.0, 0.0]],
            &HOptions {
                target_radius: 0.5,
                tol: 1e-6,
                check_nodes: false,
            },
        )
        .unwrap();
        assert!(rep.max_abs_error <= 1e-10);
    }

    #[test]
    fn unstable_truncation_is_reported() {
        let pair = builtin("so2").unwrap();
        let table = CoefficientTable::build(&pair, 4).unwrap();
        let q = BoxQuadrature::new(2, 1.0, 16).unwrap();
        let fhat = InvariantFunction::bump(2, 1.0);
        let err = build_h_global(
            &table,
            &fhat,
            &q,
            &HOptions {
                target_radius: 3.0,
                tol: 1e-8,
                check_nodes: false,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnstableTruncation { .. }));
    }

    #[test]
    fn moment_route_matches_table_route() {
        let pair = builtin("z2-r2").unwrap();
        let table = CoefficientTable::build(&pair, 10).unwrap();
        let q = BoxQuadrature::new(2, 1.0, 16).unwrap();
        let fhat = InvariantFunction::even_bump(2, 1.0);
        let dens = |x: &[f64]| fhat.eval(x);
        let a = h_coefficients(&table, &q, &dens, 1.0).unwrap();
        let b = MomentRoute::new(&pair, 10)
            .unwrap()
            .coefficients(&q, &dens, 1.0)
            .unwrap();
        assert_eq!(a.len(), b.len());
        for ((ja, ma, ca), (jb, mb, cb)) in a.iter().zip(&b) {
            assert_eq!((ja, ma), (jb, mb));
            assert!(
                (ca - cb).norm() <= 1e-14 * ca.norm().max(1e-3),
                "{ja}: {ca} vs {cb}"
            );
        }
    }

    #[test]
    fn corollary_zero_and_trivial() {
        let pair = builtin("trivial").unwrap();
        let table = CoefficientTable::build(&pair, 30).unwrap();
        let q = BoxQuadrature::new(2, 1.0, 32).unwrap();
        let g = InvariantFunction::even_bump(2, 1.0);
        let h = corollary_h_from_g(
            &table,
            &g,
            &q,
            &HOptions {
                target_radius: 2.0,
                ..HOptions::default()
            },
        )
        .unwrap();
        for xi in ball_points(2, 2.0, 8, 3) {
            let want = fourier_forward(&g, &q, &xi).unwrap();
            assert!((h.eval(&xi).unwrap().value - want).norm() < 1e-8);
        }
        let z = corollary_h_from_g(&table, &InvariantFunction::zero(2), &q, &HOptions::default()).unwrap();
        assert_eq!(z.eval(&[1.0, 1.0]).unwrap().value, Complex64::zero());
    }

    #[test]
    fn ball_points_are_reproducible() {
        let a = ball_points(3, 2.0, 50, 11);
        assert_eq!(a, ball_points(3, 2.0, 50, 11));
        assert!(a.iter().all(|x| norm_sq(x) <= 4.0));
        assert_ne!(a, ball_points(3, 2.0, 50, 12));
    }
}
