#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::learn::{label_readmission, load_labels_from_reader};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(records) = load_labels_from_reader(data, Path::new("<fuzz>")) {
        for rec in &records {
            assert!(!rec.encounter_id.is_empty());
            let label = label_readmission(rec.readmit_lag);
            assert!(label == 0 || label == 1);
        }
    }
});
