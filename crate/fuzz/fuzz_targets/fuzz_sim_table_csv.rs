#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::vecops::read_sim_table_from_reader;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(table) = read_sim_table_from_reader(data, Path::new("<fuzz>")) {
        for (_, cluster, sim) in table.rows() {
            assert!(*cluster >= 1 && *cluster as usize <= table.k);
            assert!(sim.is_finite() && sim.abs() <= 1.0 + 1e-9);
        }
    }
});
