//! Stored profile documents must never panic the parser, and any document it
//! accepts must convert to a profile (or report a clean error) and re-emit
//! round-trip-stable JSON.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let text = String::from_utf8_lossy(data);
    if let Ok(doc) = dnls::ProfileDocument::parse(&text) {
        if doc.to_profile().is_ok() {
            // An accepted document must survive its own serialization.
            let emitted = doc.to_json();
            let back = dnls::ProfileDocument::parse(&emitted).expect("round trip");
            assert_eq!(back.values, doc.values);
        }
    }
});
