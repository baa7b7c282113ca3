#![no_main]

use gelfand::group::GroupSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = GroupSpec::from_json_str(text) else {
        return;
    };
    if let Ok(group) = spec.validate() {
        let again = group.to_spec().validate().expect("normalized spec validates");
        assert_eq!(again.dimension(), group.dimension());
        assert_eq!(again.kind_name(), group.kind_name());
        assert_eq!(again.nodes().len(), group.nodes().len());
    }
});
