#![no_main]

use gelfand::poly::{GaussianRational, Polynomial, Rational};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = Polynomial::<Rational>::from_json_str(data) {
        let again = Polynomial::<Rational>::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, again);
    }
    if let Ok(p) = Polynomial::<GaussianRational>::from_json_str(data) {
        let again = Polynomial::<GaussianRational>::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, again);
    }
});
