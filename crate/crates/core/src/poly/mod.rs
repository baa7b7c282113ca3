//! Exact sparse multivariate polynomials and multi-index calculus.

pub mod json;
pub mod multiindex;
pub mod polynomial;
pub mod scalar;

pub use json::{JsonCoeff, PolynomialSpec, TermSpec};
pub use multiindex::{factorial, indices_of_degree, indices_up_to_degree, MultiIndex};
pub use polynomial::{derivative_at_zero_pairing, Polynomial};
pub use scalar::{
    format_rational, gauss, i_pow, i_pow_f64, parse_rational, rat, rational_to_f64, GaussianRational,
    Rational, Scalar,
};
