//! Note ingestion and text cleaning.
//!
//! Cleaning keeps only lowercase letters, single spaces, and the four
//! sentence delimiters `. ; ? !`. Everything else (digits, other
//! punctuation, non-ASCII) becomes a space so word boundaries survive.
//! No stemming, no stop-word removal, no spelling correction — misspellings
//! are signal here.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One row of the notes file: an encounter id and its raw note text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNote {
    pub encounter_id: String,
    pub note_text: String,
}

/// An ordered list of cleaned tokens, each matching `[a-z]+`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
}

/// A note reduced to its cleaned tokens, sentence boundaries discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanNote {
    pub encounter_id: String,
    pub tokens: Vec<String>,
}

const DELIMITERS: [char; 4] = ['.', ';', '?', '!'];

/// Lowercases and strips everything except letters, spaces, and the four
/// sentence delimiters. Runs of spaces collapse to one; ends are trimmed.
/// Idempotent: cleaning cleaned text is a no-op.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        let c = c.to_ascii_lowercase();
        if c.is_ascii_lowercase() || DELIMITERS.contains(&c) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Splits cleaned text into sentences on `. ; ? !`, then tokens on spaces.
/// Empty segments vanish. Expects `normalize_text` output.
pub fn split_sentences(clean: &str) -> Vec<Sentence> {
    clean
        .split(DELIMITERS)
        .filter_map(|segment| {
            let tokens: Vec<String> = segment
                .split_whitespace()
                .map(|t| t.to_string())
                .collect();
            if tokens.is_empty() {
                None
            } else {
                Some(Sentence { tokens })
            }
        })
        .collect()
}

/// Cleans a raw note into its flat token list (sentence boundaries dropped).
pub fn clean_note(note: &RawNote) -> CleanNote {
    let normalized = normalize_text(&note.note_text);
    let tokens = split_sentences(&normalized)
        .into_iter()
        .flat_map(|s| s.tokens)
        .collect();
    CleanNote {
        encounter_id: note.encounter_id.clone(),
        tokens,
    }
}

/// Anything that can replay its sentences from the start. Embedding training
/// makes two passes (vocabulary build, then training), so one-shot iterators
/// are not enough.
pub trait SentenceSource: Sync {
    fn sentences(&self) -> Box<dyn Iterator<Item = Result<Sentence>> + Send + '_>;
}

/// In-memory corpus, used by the synthetic generator and tests.
impl SentenceSource for Vec<Sentence> {
    fn sentences(&self) -> Box<dyn Iterator<Item = Result<Sentence>> + Send + '_> {
        Box::new(self.iter().cloned().map(Ok))
    }
}

/// A corpus rooted at a file or directory of plain-text files, one raw note
/// (or fragment) per line. Files stream in filename order, lines in file
/// order, so two passes see the identical sentence sequence. Memory use is
/// one line at a time.
#[derive(Debug, Clone)]
pub struct CorpusReader {
    files: Vec<PathBuf>,
}

impl CorpusReader {
    /// Opens a corpus at `path`. A directory contributes its regular files
    /// sorted by name; a single file contributes itself.
    pub fn open(path: &Path) -> Result<Self> {
        let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
        let mut files = Vec::new();
        if meta.is_dir() {
            for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
                let entry = entry.map_err(|e| Error::io(path, e))?;
                let p = entry.path();
                if p.is_file() {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        Ok(CorpusReader { files })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

impl SentenceSource for CorpusReader {
    fn sentences(&self) -> Box<dyn Iterator<Item = Result<Sentence>> + Send + '_> {
        Box::new(CorpusSentences {
            files: &self.files,
            next_file: 0,
            lines: None,
            queued: Vec::new(),
        })
    }
}

struct CorpusSentences<'a> {
    files: &'a [PathBuf],
    next_file: usize,
    lines: Option<(PathBuf, Lines<BufReader<File>>)>,
    /// Sentences from the current line, in reverse so `pop` yields in order.
    queued: Vec<Sentence>,
}

impl Iterator for CorpusSentences<'_> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(s) = self.queued.pop() {
                return Some(Ok(s));
            }
            if let Some((path, lines)) = self.lines.as_mut() {
                match lines.next() {
                    Some(Ok(line)) => {
                        let mut sents = split_sentences(&normalize_text(&line));
                        sents.reverse();
                        self.queued = sents;
                        continue;
                    }
                    Some(Err(e)) => {
                        let path = path.clone();
                        self.lines = None;
                        return Some(Err(Error::io(path, e)));
                    }
                    None => {
                        self.lines = None;
                        continue;
                    }
                }
            }
            if self.next_file >= self.files.len() {
                return None;
            }
            let path = self.files[self.next_file].clone();
            self.next_file += 1;
            match File::open(&path) {
                Ok(f) => {
                    self.lines = Some((path, BufReader::new(f).lines()));
                }
                Err(e) => return Some(Err(Error::io(path, e))),
            }
        }
    }
}

/// Column names the notes CSV must carry.
pub const NOTES_ID_COLUMN: &str = "PAT_ENC_CSN_ID";
pub const NOTES_TEXT_COLUMN: &str = "NOTE_TEXT";

/// Reads the notes CSV (`PAT_ENC_CSN_ID,NOTE_TEXT`, standard quoting, notes
/// may span lines inside quotes). Rows come back in file order.
pub fn load_notes(path: &Path) -> Result<Vec<RawNote>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_notes_from_reader(BufReader::new(file), path)
}

pub fn load_notes_from_reader(rdr: impl std::io::Read, path: &Path) -> Result<Vec<RawNote>> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(rdr);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = find_column(&headers, NOTES_ID_COLUMN, path)?;
    let text_col = find_column(&headers, NOTES_TEXT_COLUMN, path)?;

    let mut notes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::Schema(format!("{}: row {}: {}", path.display(), i + 2, e))
        })?;
        let encounter_id = record.get(id_col).unwrap_or("").to_string();
        if encounter_id.is_empty() {
            return Err(Error::Schema(format!(
                "{}: row {}: empty {NOTES_ID_COLUMN}",
                path.display(),
                i + 2
            )));
        }
        let note_text = record.get(text_col).unwrap_or("").to_string();
        notes.push(RawNote {
            encounter_id,
            note_text,
        });
    }
    Ok(notes)
}

pub(crate) fn find_column(
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Schema(format!("{}: missing column {name}", path.display()))
    })
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{}: {other:?}", path.display())),
    }
}

/// Cleans every file under `corpus_dir` into a mirror under `out_dir`,
/// one cleaned line per raw line. With `dedup`, lines whose cleaned form
/// was already emitted (across all files) are skipped. Returns the number
/// of lines written.
pub fn clean_corpus_dir(corpus_dir: &Path, out_dir: &Path, dedup: bool) -> Result<usize> {
    use std::io::Write;

    let reader = CorpusReader::open(corpus_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut seen: HashSet<String> = HashSet::new();
    let mut written = 0usize;
    for file in reader.files() {
        let name = file
            .file_name()
            .ok_or_else(|| Error::Param(format!("not a file: {}", file.display())))?;
        let out_path = out_dir.join(name);
        let input = File::open(file).map_err(|e| Error::io(file, e))?;
        let mut out = std::io::BufWriter::new(
            File::create(&out_path).map_err(|e| Error::io(&out_path, e))?,
        );
        for line in BufReader::new(input).lines() {
            let line = line.map_err(|e| Error::io(file, e))?;
            let cleaned = normalize_text(&line);
            if dedup && !seen.insert(cleaned.clone()) {
                continue;
            }
            writeln!(out, "{cleaned}").map_err(|e| Error::io(&out_path, e))?;
            written += 1;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &Sentence) -> Vec<&str> {
        s.tokens.iter().map(|t| t.as_str()).collect()
    }

    #[test]
    fn normalize_empty() {
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn normalize_strips_digits_and_punctuation() {
        // The digit inside "O2" goes away but the surviving letter stays a token.
        assert_eq!(normalize_text("Pt O2 sat 88%, stable."), "pt o sat stable.");
    }

    #[test]
    fn normalize_keeps_delimiters_in_place() {
        assert_eq!(normalize_text("a.b"), "a.b");
        assert_eq!(normalize_text("a;b?c!d"), "a;b?c!d");
    }

    #[test]
    fn normalize_collapses_spaces() {
        assert_eq!(normalize_text("a   b\t\nc"), "a b c");
    }

    #[test]
    fn normalize_non_ascii_becomes_space() {
        assert_eq!(normalize_text("café №5"), "caf");
    }

    #[test]
    fn split_simple() {
        let s = split_sentences("pt has copd. sats low");
        assert_eq!(s.len(), 2);
        assert_eq!(toks(&s[0]), ["pt", "has", "copd"]);
        assert_eq!(toks(&s[1]), ["sats", "low"]);
    }

    #[test]
    fn split_only_delimiters() {
        assert!(split_sentences("...").is_empty());
    }

    #[test]
    fn split_each_delimiter() {
        let s = split_sentences("a;b?c!d");
        let flat: Vec<Vec<&str>> = s.iter().map(toks).collect();
        assert_eq!(flat, vec![vec!["a"], vec!["b"], vec!["c"], vec!["d"]]);
    }

    #[test]
    fn clean_note_flattens_sentences() {
        let note = RawNote {
            encounter_id: "e1".into(),
            note_text: "Pt has COPD. O2 sat 88%!".into(),
        };
        let clean = clean_note(&note);
        assert_eq!(clean.tokens, ["pt", "has", "copd", "o", "sat"]);
    }

    #[test]
    fn stream_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let reader = CorpusReader::open(dir.path()).unwrap();
        assert_eq!(reader.sentences().count(), 0);
    }

    #[test]
    fn stream_single_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "a b. c").unwrap();
        let reader = CorpusReader::open(dir.path()).unwrap();
        let got: Vec<Sentence> = reader.sentences().map(|r| r.unwrap()).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(toks(&got[0]), ["a", "b"]);
        assert_eq!(toks(&got[1]), ["c"]);
    }

    #[test]
    fn stream_files_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "second").unwrap();
        std::fs::write(dir.path().join("a.txt"), "first").unwrap();
        let reader = CorpusReader::open(dir.path()).unwrap();
        let got: Vec<Sentence> = reader.sentences().map(|r| r.unwrap()).collect();
        assert_eq!(toks(&got[0]), ["first"]);
        assert_eq!(toks(&got[1]), ["second"]);
    }

    #[test]
    fn stream_replay_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "a b. c d; e\nf g").unwrap();
        let reader = CorpusReader::open(dir.path()).unwrap();
        let first: Vec<Sentence> = reader.sentences().map(|r| r.unwrap()).collect();
        let second: Vec<Sentence> = reader.sentences().map(|r| r.unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn stream_missing_path_names_it() {
        let err = CorpusReader::open(Path::new("/nonexistent/corpus-xyz")).unwrap_err();
        assert_eq!(err.category(), "io");
        assert!(err.to_string().contains("corpus-xyz"));
    }

    #[test]
    fn load_notes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.csv");
        std::fs::write(&p, "PAT_ENC_CSN_ID,NOTE_TEXT\n").unwrap();
        assert!(load_notes(&p).unwrap().is_empty());
    }

    #[test]
    fn load_notes_keeps_order_and_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.csv");
        std::fs::write(
            &p,
            "PAT_ENC_CSN_ID,NOTE_TEXT\n1,\"pt stable, went home\n on o2\"\n2,second note\n",
        )
        .unwrap();
        let notes = load_notes(&p).unwrap();
        assert_eq!(notes.len(), 2);
        assert_eq!(notes[0].encounter_id, "1");
        assert!(notes[0].note_text.contains('\n'));
        assert_eq!(notes[1].encounter_id, "2");
    }

    #[test]
    fn load_notes_bad_row_names_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.csv");
        std::fs::write(&p, "PAT_ENC_CSN_ID,NOTE_TEXT\n1,ok\n2,too,many,fields\n").unwrap();
        let err = load_notes(&p).unwrap_err();
        assert_eq!(err.category(), "schema");
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn load_notes_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.csv");
        std::fs::write(&p, "PAT_ENC_CSN_ID,BODY\n1,x\n").unwrap();
        let err = load_notes(&p).unwrap_err();
        assert_eq!(err.category(), "schema");
        assert!(err.to_string().contains("NOTE_TEXT"));
    }

    #[test]
    fn clean_empty_dir_gives_empty_mirror() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let out_path = out.path().join("clean");
        let n = clean_corpus_dir(dir.path(), &out_path, false).unwrap();
        assert_eq!(n, 0);
        assert!(out_path.is_dir());
        assert_eq!(std::fs::read_dir(&out_path).unwrap().count(), 0);
    }

    #[test]
    fn clean_corpus_dir_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "same note\nsame note\nother").unwrap();
        let n = clean_corpus_dir(dir.path(), out.path(), true).unwrap();
        assert_eq!(n, 2);
        let n2 = clean_corpus_dir(dir.path(), out.path(), false).unwrap();
        assert_eq!(n2, 3);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in ".{0,200}") {
            let once = normalize_text(&raw);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn tokens_are_lowercase_letters(raw in ".{0,200}") {
            for sentence in split_sentences(&normalize_text(&raw)) {
                for token in &sentence.tokens {
                    prop_assert!(!token.is_empty());
                    prop_assert!(token.chars().all(|c| c.is_ascii_lowercase()));
                }
            }
        }

        #[test]
        fn token_conservation(raw in ".{0,200}") {
            let clean = normalize_text(&raw);
            let via_sentences: Vec<String> = split_sentences(&clean)
                .into_iter()
                .flat_map(|s| s.tokens)
                .collect();
            let direct: Vec<String> = clean
                .replace(DELIMITERS, " ")
                .split_whitespace()
                .map(|t| t.to_string())
                .collect();
            prop_assert_eq!(via_sentences, direct);
        }
    }
}
