#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_core::formats::{read_ieq, write_ieq};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(h) = read_ieq(text) {
            let _ = read_ieq(&write_ieq(&h)).expect("written .ieq reparses");
        }
    }
});
