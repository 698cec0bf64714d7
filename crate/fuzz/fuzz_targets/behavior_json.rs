#![no_main]
use libfuzzer_sys::fuzz_target;
use lfpoly_core::formats::{behavior_doc_from_json, ScenarioRef};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = behavior_doc_from_json(text) else { return };
    // never touch the filesystem
    if !matches!(doc.scenario, ScenarioRef::Inline(_)) {
        return;
    }
    if let Ok(s) = doc.scenario(None) {
        let _ = doc.exact(&s);
        let _ = doc.float(&s);
    }
});
