#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::embedding::load_model_from_reader;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(model) = load_model_from_reader(data, Path::new("<fuzz>")) {
        assert!(model.len() > 0);
        assert!(model.dim() > 0);
        for i in 0..model.len() {
            assert!(model.vector(i).iter().all(|x| x.is_finite()));
        }
    }
});
