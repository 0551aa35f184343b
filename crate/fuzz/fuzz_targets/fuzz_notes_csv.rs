#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use notevec::corpus::{clean_note, load_notes_from_reader};

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(notes) = load_notes_from_reader(data, Path::new("<fuzz>")) {
        // parsed notes must survive cleaning
        for note in &notes {
            assert!(!note.encounter_id.is_empty());
            let clean = clean_note(note);
            assert!(clean.tokens.iter().all(|t| !t.is_empty()));
        }
    }
});
