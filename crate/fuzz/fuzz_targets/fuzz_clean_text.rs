#![no_main]

use libfuzzer_sys::fuzz_target;
use notevec::corpus::{normalize_text, split_sentences};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let clean = normalize_text(text);
    // cleaning is idempotent
    assert_eq!(normalize_text(&clean), clean);
    // every token is pure lowercase letters
    for sentence in split_sentences(&clean) {
        for token in &sentence.tokens {
            assert!(!token.is_empty());
            assert!(token.bytes().all(|b| b.is_ascii_lowercase()));
        }
    }
});
