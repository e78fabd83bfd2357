//! F-table parsing must never panic on arbitrary text, and anything it
//! accepts must survive spec conversion and normalization without panicking.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let text = String::from_utf8_lossy(data);
    if let Ok(table) = dnls::FTable::parse(&text) {
        if let Ok(spec) = table.into_spec() {
            if let Ok(np) = dnls::normalize(&spec) {
                // Exercise the interpolants across the folded domain too.
                for k in 0..=32 {
                    let eta = -1.25 + 2.5 * k as f64 / 32.0;
                    let _ = np.eval_f(eta);
                    let _ = np.eval_f_prime(eta);
                }
            }
        }
    }
});
