//! Spherical functions of compact linear group actions on `R^n` and the
//! reconstruction of invariant functions as analytic functions of a generator
//! map.

pub mod catalog;
pub mod error;
pub mod group;
pub mod invariant;
pub mod linalg;
pub mod poly;
pub mod spherical;
pub mod transform;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
