#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::vecops::read_seed_bag_from_reader;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(bag) = read_seed_bag_from_reader(data, "seedword", Path::new("<fuzz>")) {
        assert_eq!(bag.entries[0], ("seedword".to_string(), 1.0));
        // scores non-increasing after the seed entry
        for w in bag.entries[1..].windows(2) {
            assert!(w[0].1 >= w[1].1 - 1e-12);
        }
    }
});
