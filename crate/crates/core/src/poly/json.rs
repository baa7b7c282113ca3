//! JSON form of polynomials:
//! `{ "n": 2, "terms": [ { "exp": [2, 0], "coeff": "1/2" }, ... ] }`.
//!
//! Rational coefficients are fraction strings, Gaussian-rational coefficients
//! are a fraction string when real and `["re", "im"]` otherwise, float
//! complex coefficients are `[re, im]` numbers. Terms are emitted in
//! graded-lex order.

use num_complex::{Complex, Complex64};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::multiindex::MultiIndex;
use super::polynomial::Polynomial;
use super::scalar::{format_rational, parse_rational, GaussianRational, Rational, Scalar};
use crate::error::{Error, Result};

/// Largest variable count accepted when decoding.
pub const MAX_SPEC_VARS: usize = 64;

pub trait JsonCoeff: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl JsonCoeff for Rational {
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap().into())),
            other => Err(Error::Parse(format!("expected fraction string, got {other}"))),
        }
    }
}

impl JsonCoeff for GaussianRational {
    fn to_json(&self) -> Value {
        if self.im.is_zero() {
            self.re.to_json()
        } else {
            Value::Array(vec![self.re.to_json(), self.im.to_json()])
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => Ok(Complex::new(
                Rational::from_json(&parts[0])?,
                Rational::from_json(&parts[1])?,
            )),
            other => Ok(Complex::new(Rational::from_json(other)?, Rational::zero())),
        }
    }
}

impl JsonCoeff for Complex64 {
    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }

    fn from_json(v: &Value) -> Result<Self> {
        let num = |x: &Value| -> Result<f64> {
            match x {
                Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse("non-finite number".into())),
                Value::String(s) => Ok(super::scalar::rational_to_f64(&parse_rational(s)?)),
                other => Err(Error::Parse(format!("expected number, got {other}"))),
            }
        };
        match v {
            Value::Array(parts) if parts.len() == 2 => Ok(Complex64::new(num(&parts[0])?, num(&parts[1])?)),
            other => Ok(Complex64::new(num(other)?, 0.0)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub n: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exp: Vec<u32>,
    pub coeff: Value,
}

impl<S: JsonCoeff> Polynomial<S> {
    pub fn to_spec(&self) -> PolynomialSpec {
        PolynomialSpec {
            n: self.n_vars(),
            terms: self
                .terms()
                .map(|(idx, c)| TermSpec {
                    exp: idx.exponents().to_vec(),
                    coeff: c.to_json(),
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &PolynomialSpec) -> Result<Self> {
        if spec.n > MAX_SPEC_VARS {
            return Err(Error::Parse(format!(
                "at most {MAX_SPEC_VARS} variables, got {}",
                spec.n
            )));
        }
        if let Some(t) = spec
            .terms
            .iter()
            .find(|t| t.exp.iter().map(|&e| u64::from(e)).sum::<u64>() > u64::from(u32::MAX))
        {
            return Err(Error::Parse(format!("total degree of {:?} overflows", t.exp)));
        }
        let terms = spec
            .terms
            .iter()
            .map(|t| Ok((MultiIndex::new(t.exp.clone()), S::from_json(&t.coeff)?)))
            .collect::<Result<Vec<_>>>()?;
        Polynomial::from_terms(spec.n, terms)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("polynomial spec serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: PolynomialSpec = serde_json::from_str(s)?;
        Self::from_spec(&spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::scalar::{gauss, rat};
    use proptest::prelude::*;

    #[test]
    fn rational_json_shape() {
        let p = Polynomial::from_terms(
            2,
            [
                (MultiIndex::from([0, 2]), rat(-1, 2)),
                (MultiIndex::from([2, 0]), rat(3, 1)),
            ],
        )
        .unwrap();
        assert_eq!(
            p.to_json_string(),
            r#"{"n":2,"terms":[{"exp":[2,0],"coeff":"3"},{"exp":[0,2],"coeff":"-1/2"}]}"#
        );
    }

    #[test]
    fn gaussian_coefficients() {
        let p = Polynomial::monomial(MultiIndex::from([1]), gauss(rat(0, 1), rat(-1, 6)));
        let s = p.to_json_string();
        assert_eq!(s, r#"{"n":1,"terms":[{"exp":[1],"coeff":["0","-1/6"]}]}"#);
        assert_eq!(Polynomial::<GaussianRational>::from_json_str(&s).unwrap(), p);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(
            Polynomial::<Rational>::from_json_str(r#"{"n":2,"terms":[{"exp":[1],"coeff":"1"}]}"#).is_err()
        );
        assert!(
            Polynomial::<Rational>::from_json_str(r#"{"n":1,"terms":[{"exp":[1],"coeff":"1/0"}]}"#).is_err()
        );
        assert!(Polynomial::<Rational>::from_json_str(r#"{"n":1,"terms":[],"extra":1}"#).is_err());
        assert!(Polynomial::<Rational>::from_json_str("[").is_err());
    }

    #[test]
    fn duplicate_terms_are_summed_and_zeros_pruned() {
        let p = Polynomial::<Rational>::from_json_str(
            r#"{"n":1,"terms":[{"exp":[1],"coeff":"1"},{"exp":[1],"coeff":"-1"},{"exp":[0],"coeff":"0"}]}"#,
        )
        .unwrap();
        assert!(p.is_zero());
    }

    proptest! {
        #[test]
        fn json_round_trip(terms in proptest::collection::vec(
            (proptest::collection::vec(0u32..5, 3), -50i64..50, 1i64..20), 0..12)) {
            let p = Polynomial::from_terms(
                3,
                terms.into_iter().map(|(e, a, b)| (MultiIndex::new(e), rat(a, b))),
            ).unwrap();
            let back = Polynomial::<Rational>::from_json_str(&p.to_json_string()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
