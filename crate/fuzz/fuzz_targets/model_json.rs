#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_quantum::possibilistic::PossibilisticModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = PossibilisticModel::from_json(text);
    }
});
