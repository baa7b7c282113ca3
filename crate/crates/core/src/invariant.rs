//! Generator sets of invariant polynomial algebras.
//!
//! A [`GelfandPair`] bundles a group with homogeneous invariant generators
//! `rho_1, ..., rho_l`. Generator monomials `rho^J` are ordered by graded
//! degree `sum_k J_k deg(rho_k)` and then by the graded-lex order of `J`.
//! Within one graded degree `m`, the expansion matrix has one row per
//! degree-`m` monomial in `x` (graded-lex) and one column per `J`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{CompactGroup, GroupSpec};
use crate::linalg::{Matrix, MinNormSolver};
use crate::poly::{
    derivative_at_zero_pairing, indices_of_degree, MultiIndex, Polynomial, PolynomialSpec, Rational, Scalar,
};

/// Version tag accepted in pair specs.
pub const PAIR_SPEC_VERSION: u32 = 1;
/// Spec limits on the generator list.
pub const MAX_SPEC_GENERATORS: usize = 32;
pub const MAX_SPEC_GENERATOR_DEGREE: u32 = 16;
/// Largest `max_degree` a spec may request as its default.
pub const MAX_SPEC_DEFAULT_DEGREE: u32 = 64;

/// A group together with a validated list of homogeneous invariant generators.
#[derive(Clone, Debug)]
pub struct GelfandPair {
    group: CompactGroup,
    generators: Vec<Polynomial<Rational>>,
    generators_f64: Vec<Polynomial<f64>>,
    degrees: Vec<u32>,
    cache: Arc<Mutex<PairCache>>,
}

#[derive(Debug, Default)]
struct PairCache {
    powers: HashMap<MultiIndex, Arc<Polynomial<Rational>>>,
    systems: BTreeMap<u32, Arc<DegreeSystem>>,
}

/// Checks homogeneity, non-vanishing and exact invariance of every generator.
pub fn validate_pair(group: CompactGroup, gens: Vec<Polynomial<Rational>>) -> Result<GelfandPair> {
    if gens.is_empty() {
        return Err(Error::NoGenerators);
    }
    let n = group.dimension();
    let mut degrees = Vec::with_capacity(gens.len());
    for (index, g) in gens.iter().enumerate() {
        if g.n_vars() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.n_vars(),
            });
        }
        if g.is_zero() {
            return Err(Error::ZeroGenerator { index });
        }
        if !g.is_homogeneous() {
            return Err(Error::NotHomogeneous { index });
        }
        let d = g.degree().expect("nonzero");
        if d == 0 {
            return Err(Error::InvalidParameter(format!("generator {index} is constant")));
        }
        if let Some((witness, defect)) = group.invariance_defect(g)? {
            return Err(Error::NotInvariant {
                index,
                witness,
                defect: defect.to_json_string(),
            });
        }
        degrees.push(d);
    }
    let generators_f64 = gens.iter().map(|g| g.map_coeffs(f64::from_rational)).collect();
    Ok(GelfandPair {
        group,
        generators: gens,
        generators_f64,
        degrees,
        cache: Arc::default(),
    })
}

impl GelfandPair {
    pub fn group(&self) -> &CompactGroup {
        &self.group
    }

    pub fn dimension(&self) -> usize {
        self.group.dimension()
    }

    /// Number of generators `l`.
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Polynomial<Rational>] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> Result<&Polynomial<Rational>> {
        self.generators.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.generators.len(),
        })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `rho(x)` at a float point.
    pub fn rho(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.generators_f64.iter().map(|g| g.eval(x)).collect()
    }

    /// `rho(x)` at an exact point.
    pub fn rho_exact<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        self.generators
            .iter()
            .map(|g| g.map_coeffs(S::from_rational).eval(x))
            .collect()
    }

    /// `rho(x)` as polynomials over any scalar field.
    pub fn generators_as<S: Scalar>(&self) -> Vec<Polynomial<S>> {
        self.generators
            .iter()
            .map(|g| g.map_coeffs(S::from_rational))
            .collect()
    }

    pub fn graded_degree(&self, j: &MultiIndex) -> Result<u32> {
        j.graded_degree(&self.degrees)
    }

    /// `rho^J`, expanded in `x`.
    pub fn generator_power(&self, j: &MultiIndex) -> Result<Arc<Polynomial<Rational>>> {
        if j.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: j.len(),
            });
        }
        if let Some(p) = self.cache.lock().expect("cache").powers.get(j) {
            return Ok(p.clone());
        }
        let p = match j.exponents().iter().position(|&e| e > 0) {
            None => Polynomial::one(self.dimension()),
            Some(k) => {
                let lower = j.checked_sub(&MultiIndex::unit(self.len(), k)).expect("positive");
                self.generator_power(&lower)?.mul(&self.generators[k])?
            }
        };
        let p = Arc::new(p);
        self.cache
            .lock()
            .expect("cache")
            .powers
            .insert(j.clone(), p.clone());
        Ok(p)
    }

    /// The linear system of graded degree `m`, built once and cached.
    pub fn degree_system(&self, m: u32) -> Result<Arc<DegreeSystem>> {
        if let Some(s) = self.cache.lock().expect("cache").systems.get(&m) {
            return Ok(s.clone());
        }
        let rows = indices_of_degree(self.dimension(), m);
        let cols = enumerate_graded(m, &self.degrees);
        let mut a = Matrix::zeros(rows.len(), cols.len());
        let row_index: HashMap<MultiIndex, usize> =
            rows.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        for (c, j) in cols.iter().enumerate() {
            for (idx, v) in self.generator_power(j)?.terms() {
                a.set(row_index[idx], c, v.clone());
            }
        }
        let solver = MinNormSolver::new(&a);
        let sys = Arc::new(DegreeSystem {
            degree: m,
            rows,
            cols,
            row_index,
            solver,
        });
        self.cache.lock().expect("cache").systems.insert(m, sys.clone());
        Ok(sys)
    }

    /// Expansion matrix of graded degree `m`: column `J` holds the monomial
    /// coefficients of `rho^J`.
    pub fn expansion_matrix(&self, m: u32) -> Result<Matrix<Rational>> {
        Ok(self.degree_system(m)?.matrix().clone())
    }

    /// Writes an invariant `p` as `q(rho(x))`, degree by degree, choosing the
    /// minimum-norm coefficient vector whenever the generators satisfy
    /// relations.
    pub fn express_in_generators<S: Scalar>(&self, p: &Polynomial<S>) -> Result<Polynomial<S>> {
        if p.n_vars() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: p.n_vars(),
            });
        }
        if let Some((witness, defect)) = self.group.invariance_defect(p)? {
            return Err(Error::NotInvariant {
                index: 0,
                witness,
                defect: format!("{defect:?}"),
            });
        }
        self.express_invariant(p)
    }

    /// As [`express_in_generators`](Self::express_in_generators) without the
    /// invariance check.
    pub fn express_invariant<S: Scalar>(&self, p: &Polynomial<S>) -> Result<Polynomial<S>> {
        let mut q = Polynomial::zero(self.len());
        for (m, comp) in p.homogeneous_components() {
            let sys = self.degree_system(m)?;
            for (j, c) in sys.solve_component(&comp)? {
                q.add_term(j, c);
            }
        }
        Ok(q)
    }

    /// `(D^J rho^{J'})(0)` with `D^J = rho^J(d/dx)`.
    pub fn pairing(&self, j: &MultiIndex, j_prime: &MultiIndex) -> Result<Rational> {
        derivative_at_zero_pairing(&*self.generator_power(j)?, &*self.generator_power(j_prime)?)
    }

    /// Searches all `J != J'` of graded degree at most `max_degree`, in graded
    /// order, for a nonzero `(D^J rho^{J'})(0)`.
    ///
    /// Indices of different graded degrees pair to zero by homogeneity, so only
    /// equal-degree pairs are evaluated.
    pub fn check_special_assumption(&self, max_degree: u32) -> Result<SpecialAssumption> {
        for m in 0..=max_degree {
            let js = enumerate_graded(m, &self.degrees);
            for j in &js {
                for jp in &js {
                    if j == jp {
                        continue;
                    }
                    let v = self.pairing(j, jp)?;
                    if !v.is_zero() {
                        return Ok(SpecialAssumption::Fails {
                            j: j.clone(),
                            j_prime: jp.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(SpecialAssumption::Holds { up_to: max_degree })
    }

    pub fn to_spec(&self) -> PairSpec {
        PairSpec {
            version: PAIR_SPEC_VERSION,
            group: self.group.to_spec(),
            generators: self.generators.iter().map(Polynomial::to_spec).collect(),
            defaults: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpecialAssumption {
    Holds {
        up_to: u32,
    },
    Fails {
        j: MultiIndex,
        j_prime: MultiIndex,
        value: Rational,
    },
}

impl SpecialAssumption {
    pub fn holds(&self) -> bool {
        matches!(self, SpecialAssumption::Holds { .. })
    }
}

/// The expansion system `A a = b` of one graded degree.
#[derive(Debug)]
pub struct DegreeSystem {
    degree: u32,
    rows: Vec<MultiIndex>,
    cols: Vec<MultiIndex>,
    row_index: HashMap<MultiIndex, usize>,
    solver: MinNormSolver,
}

impl DegreeSystem {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Degree-`m` monomials in `x`, graded-lex.
    pub fn rows(&self) -> &[MultiIndex] {
        &self.rows
    }

    /// Generator indices `J` of graded degree `m`, graded-lex.
    pub fn cols(&self) -> &[MultiIndex] {
        &self.cols
    }

    pub fn row_of(&self, i: &MultiIndex) -> Option<usize> {
        self.row_index.get(i).copied()
    }

    pub fn matrix(&self) -> &Matrix<Rational> {
        self.solver.matrix()
    }

    pub fn rank(&self) -> usize {
        self.solver.rank()
    }

    pub fn pseudo_inverse(&self) -> &Matrix<Rational> {
        self.solver.pseudo_inverse()
    }

    /// Minimum-norm coefficients `(J, a_J)` of a homogeneous degree-`m`
    /// polynomial; zero coefficients are dropped.
    pub fn solve_component<S: Scalar>(&self, comp: &Polynomial<S>) -> Result<Vec<(MultiIndex, S)>> {
        let mut rhs = vec![S::zero(); self.rows.len()];
        for (idx, c) in comp.terms() {
            let r = self.row_of(idx).ok_or(Error::DimensionMismatch {
                expected: self.degree as usize,
                found: idx.degree() as usize,
            })?;
            rhs[r] = c.clone();
        }
        match self.solver.solve(&rhs) {
            Ok(a) => Ok(self
                .cols
                .iter()
                .cloned()
                .zip(a)
                .filter(|(_, c)| !c.is_zero())
                .collect()),
            Err(residual) => Err(Error::NotExpressible {
                degree: self.degree,
                residual: describe_residual(&self.rows, &residual),
            }),
        }
    }

    /// `A^+ b` for a right-hand side whose entries are polynomials.
    pub fn apply_pseudo_inverse<S: Scalar>(&self, rhs: &[Polynomial<S>]) -> Vec<Polynomial<S>> {
        apply_rational(self.pseudo_inverse(), rhs)
    }

    /// `A a` for polynomial-valued coefficients.
    pub fn apply_matrix<S: Scalar>(&self, a: &[Polynomial<S>]) -> Vec<Polynomial<S>> {
        apply_rational(self.matrix(), a)
    }
}

fn apply_rational<S: Scalar>(m: &Matrix<Rational>, v: &[Polynomial<S>]) -> Vec<Polynomial<S>> {
    let n_vars = v.first().map_or(0, Polynomial::n_vars);
    (0..m.rows())
        .map(|i| {
            let mut acc = Polynomial::zero(n_vars);
            for (c, p) in m.row(i).iter().zip(v) {
                if c.is_zero() || p.is_zero() {
                    continue;
                }
                let sc = S::from_rational(c);
                for (idx, x) in p.terms() {
                    acc.add_term(idx.clone(), x.clone() * sc.clone());
                }
            }
            acc
        })
        .collect()
}

fn describe_residual<S: Scalar>(rows: &[MultiIndex], residual: &[S]) -> String {
    let parts: Vec<String> = rows
        .iter()
        .zip(residual)
        .filter(|(_, r)| !r.is_zero())
        .map(|(i, r)| format!("x^{i}: {r:?}"))
        .collect();
    parts.join(", ")
}

/// All `J` with `sum_k J_k degrees_k = m`, graded-lex order.
pub fn enumerate_graded(m: u32, degrees: &[u32]) -> Vec<MultiIndex> {
    fn rec(pos: usize, remaining: u32, degrees: &[u32], cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == degrees.len() {
            if remaining == 0 {
                out.push(MultiIndex::new(cur.clone()));
            }
            return;
        }
        let d = degrees[pos];
        let max = remaining.checked_div(d).unwrap_or(0);
        for e in 0..=max {
            cur[pos] = e;
            rec(pos + 1, remaining - e * d, degrees, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    rec(0, m, degrees, &mut vec![0; degrees.len()], &mut out);
    out.sort();
    out
}

/// All `J` of graded degree at most `max`, ordered by graded degree, then graded-lex.
pub fn enumerate_graded_up_to(max: u32, degrees: &[u32]) -> Vec<MultiIndex> {
    (0..=max).flat_map(|m| enumerate_graded(m, degrees)).collect()
}

/// Pair spec JSON:
/// `{ "version": 1, "group": <group spec>, "generators": [<polynomial spec>, ...], "defaults"?: {...} }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub version: u32,
    pub group: GroupSpec,
    pub generators: Vec<PolynomialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<SpecDefaults>,
}

/// Optional per-spec defaults for command-line parameters.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl PairSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("pair spec serializes")
    }

    pub fn validate(&self) -> Result<GelfandPair> {
        if self.version != PAIR_SPEC_VERSION {
            return Err(Error::Parse(format!(
                "unsupported pair spec version {} (expected {PAIR_SPEC_VERSION})",
                self.version
            )));
        }
        if let Some(d) = &self.defaults {
            if d.quad_radius.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
                return Err(Error::InvalidParameter("quad_radius must be positive".into()));
            }
            if d.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
                return Err(Error::InvalidParameter("tol must be positive".into()));
            }
            if d.max_degree.is_some_and(|m| m > MAX_SPEC_DEFAULT_DEGREE) {
                return Err(Error::InvalidParameter(format!(
                    "default max_degree exceeds {MAX_SPEC_DEFAULT_DEGREE}"
                )));
            }
        }
        if self.generators.len() > MAX_SPEC_GENERATORS {
            return Err(Error::InvalidParameter(format!(
                "more than {MAX_SPEC_GENERATORS} generators"
            )));
        }
        for (index, g) in self.generators.iter().enumerate() {
            let too_high = g.terms.iter().any(|t| {
                t.exp.iter().map(|&e| u64::from(e)).sum::<u64>() > u64::from(MAX_SPEC_GENERATOR_DEGREE)
            });
            if too_high {
                return Err(Error::InvalidParameter(format!(
                    "generator {index} exceeds degree {MAX_SPEC_GENERATOR_DEGREE}"
                )));
            }
        }
        let group = self.group.validate()?;
        let gens = self
            .generators
            .iter()
            .map(Polynomial::from_spec)
            .collect::<Result<Vec<_>>>()?;
        validate_pair(group, gens)
    }
}

/// Largest coefficient magnitude of an exact residual.
pub fn max_abs(values: impl IntoIterator<Item = Rational>) -> Rational {
    values
        .into_iter()
        .map(|v| v.abs())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}
