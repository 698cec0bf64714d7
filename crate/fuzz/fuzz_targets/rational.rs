#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_core::rational;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(r) = rational::parse(text) {
            assert_eq!(rational::parse(&rational::fmt(&r)).unwrap(), r);
        }
    }
});
