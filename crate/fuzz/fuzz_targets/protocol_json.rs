#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_quantum::protocol::ProtocolSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = ProtocolSpec::from_json(text) {
            let _ = p.validate();
        }
    }
});
