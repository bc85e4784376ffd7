#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = appell_core::format::parse_kernels(text);
        let _ = appell_core::format::parse(text);
    }
});
