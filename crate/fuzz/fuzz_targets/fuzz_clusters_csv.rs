#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::vecops::read_clusters_from_reader;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    let _ = read_clusters_from_reader(data, Path::new("<fuzz>"));
});
