//! Built-in pairs.
//!
//! * `trivial`: the identity group on `R^2`, generators `x1, x2`.
//! * `z2-r2`: `{+Id, -Id}` on `R^2`, generators `x1^2, x1 x2, x2^2`.
//! * `so2`: rotations of `R^2`, generator `|x|^2`.
//! * `so3`: rotations of `R^3`, generator `|x|^2`.

use crate::error::{Error, Result};
use crate::group::{norm_squared, CompactGroup, DEFAULT_SO2_POINTS, DEFAULT_SO3_RESOLUTION};
use crate::invariant::{validate_pair, GelfandPair, PairSpec};
use crate::poly::{MultiIndex, Polynomial, Rational, Scalar};

pub const BUILTIN_NAMES: [&str; 4] = ["trivial", "z2-r2", "so2", "so3"];

fn monomial(e: &[u32]) -> Polynomial<Rational> {
    Polynomial::monomial(MultiIndex::new(e.to_vec()), Rational::from_i64(1))
}

pub fn builtin(name: &str) -> Result<GelfandPair> {
    match name {
        "trivial" => validate_pair(
            CompactGroup::trivial(2),
            vec![monomial(&[1, 0]), monomial(&[0, 1])],
        ),
        "z2-r2" => validate_pair(
            CompactGroup::sign_group(2),
            vec![monomial(&[2, 0]), monomial(&[1, 1]), monomial(&[0, 2])],
        ),
        "so2" => validate_pair(CompactGroup::so2(DEFAULT_SO2_POINTS)?, vec![norm_squared(2)]),
        "so3" => validate_pair(CompactGroup::so3(DEFAULT_SO3_RESOLUTION)?, vec![norm_squared(3)]),
        other => Err(Error::InvalidParameter(format!(
            "unknown builtin pair {other:?} (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_spec(name: &str) -> Result<PairSpec> {
    Ok(builtin(name)?.to_spec())
}
