#![no_main]

use gelfand::invariant::PairSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(spec) = PairSpec::from_json_str(data) else {
        return;
    };
    if let Ok(pair) = spec.validate() {
        let normalized = pair.to_spec();
        let again = normalized.validate().expect("normalized spec validates");
        assert_eq!(again.to_spec(), normalized);
    }
});
