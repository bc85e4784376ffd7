#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = appell_core::config::RunConfig::parse(text, std::path::Path::new(".")) {
            let _ = cfg.measure();
            let _ = cfg.alpha();
        }
    }
});
