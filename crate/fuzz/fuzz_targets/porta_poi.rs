#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_core::formats::{read_poi, write_poi};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = read_poi(text) {
            let _ = read_poi(&write_poi(&v)).expect("written .poi reparses");
        }
    }
});
