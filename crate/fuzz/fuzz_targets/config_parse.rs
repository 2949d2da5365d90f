#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // Any text must parse or fail with an error, never panic.
    if let Ok(cfg) = hdg_shishkin::config::parse_config(data) {
        let _ = cfg.validate();
        let _ = cfg.warnings();
    }
});
