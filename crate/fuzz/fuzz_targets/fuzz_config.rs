//! Config-file parsing must never panic on arbitrary text; every line either
//! applies or reports a structured error.

#![no_main]

use libfuzzer_sys::fuzz_target;

use dnls_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let text = String::from_utf8_lossy(data);
    let mut cfg = RunConfig::default();
    let _ = cfg.apply_file(&text);
});
