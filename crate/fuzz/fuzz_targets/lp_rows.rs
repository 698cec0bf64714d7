#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_core::lp::LinearProgram;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(lp) = LinearProgram::from_rows(text) {
            assert_eq!(LinearProgram::from_rows(&lp.to_rows()).unwrap(), lp);
        }
    }
});
