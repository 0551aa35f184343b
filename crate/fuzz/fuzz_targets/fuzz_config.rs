#![no_main]

use libfuzzer_sys::fuzz_target;
use notevec::config::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 1 << 14 {
        return;
    }
    let mut cfg = PipelineConfig::default();
    let _ = cfg.apply_text(text);
});
