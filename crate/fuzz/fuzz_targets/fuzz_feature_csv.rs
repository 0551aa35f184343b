#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::features::{read_cluster_feature_from_reader, read_seed_feature_from_reader};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    let _ = read_seed_feature_from_reader(data, Path::new("<fuzz>"));
    let _ = read_cluster_feature_from_reader(data, Path::new("<fuzz>"));
});
