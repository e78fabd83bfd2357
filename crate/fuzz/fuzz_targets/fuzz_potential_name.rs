//! Potential-name resolution must never panic, whatever the name. Accepted
//! names must also survive normalization without panicking.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 256 {
        return;
    }
    let name = String::from_utf8_lossy(data);
    if let Ok(spec) = dnls::builtin(&name) {
        let _ = dnls::normalize(&spec);
    }
});
