#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = lfpoly_core::formats::scenario_from_json(text) {
            let _ = s.n_coords();
        }
        let _ = lfpoly_core::formats::sequential_spec_from_json(text);
        let _ = lfpoly_core::formats::parse_lf_spec(text);
    }
});
