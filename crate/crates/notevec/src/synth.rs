//! Synthetic corpora and labeled encounter datasets with planted topic
//! structure, so the whole pipeline is testable without the private notes.
//!
//! Words are pure lowercase letters so they survive the cleaning rules
//! unchanged. Every generated word belongs to exactly one topic or to the
//! shared (ambient) pool, and that ground truth rides along.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TopicSpec {
    pub n_topics: usize,
    pub words_per_topic: usize,
    pub shared_words: usize,
    /// Inclusive (min, max) tokens per sentence.
    pub sentence_len: (usize, usize),
    /// Probability a token comes from the sentence's topic rather than the
    /// shared pool.
    pub topic_purity: f64,
    pub n_sentences: usize,
    /// The generator oversamples until every topic word occurs at least
    /// this often.
    pub min_word_count: u64,
    pub rng_seed: u64,
}

impl Default for TopicSpec {
    fn default() -> Self {
        TopicSpec {
            n_topics: 2,
            words_per_topic: 12,
            shared_words: 8,
            sentence_len: (4, 9),
            topic_purity: 0.8,
            n_sentences: 1200,
            min_word_count: 5,
            rng_seed: 42,
        }
    }
}

impl TopicSpec {
    fn validate(&self) -> Result<()> {
        if self.n_topics < 1 || self.n_topics > 26 {
            return Err(Error::Param("n_topics must be in 1..=26".into()));
        }
        if self.words_per_topic < 1 || self.words_per_topic > 676 {
            return Err(Error::Param("words_per_topic must be in 1..=676".into()));
        }
        if self.shared_words > 676 {
            return Err(Error::Param("shared_words must be <= 676".into()));
        }
        if self.sentence_len.0 < 1 || self.sentence_len.0 > self.sentence_len.1 {
            return Err(Error::Param(
                "sentence_len must satisfy 1 <= min <= max".into(),
            ));
        }
        if !(self.topic_purity > 0.0 && self.topic_purity <= 1.0) {
            return Err(Error::Param("topic_purity must be in (0, 1]".into()));
        }
        if self.n_sentences < 1 {
            return Err(Error::Param("n_sentences must be >= 1".into()));
        }
        Ok(())
    }
}

/// Where a generated word belongs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordOrigin {
    Topic(usize),
    Shared,
}

/// A generated corpus with its ground truth.
#[derive(Debug, Clone)]
pub struct TopicCorpus {
    pub sentences: Vec<Sentence>,
    /// Topic index of each sentence.
    pub sentence_topics: Vec<usize>,
    pub topic_words: Vec<Vec<String>>,
    pub shared: Vec<String>,
    pub word_origin: HashMap<String, WordOrigin>,
}

/// Digit-free word spelling: letters only, fixed widths, so topic and shared
/// vocabularies can never collide.
fn suffix(j: usize) -> String {
    let hi = (b'a' + (j / 26) as u8) as char;
    let lo = (b'a' + (j % 26) as u8) as char;
    format!("{hi}{lo}")
}

fn topic_word(topic: usize, j: usize) -> String {
    let t = (b'a' + topic as u8) as char;
    format!("top{t}{}", suffix(j))
}

fn shared_word(j: usize) -> String {
    format!("amb{}", suffix(j))
}

fn gen_sentence(
    rng: &mut ChaCha8Rng,
    spec: &TopicSpec,
    topic: usize,
    topic_words: &[Vec<String>],
    shared: &[String],
) -> Sentence {
    let len = rng.random_range(spec.sentence_len.0..=spec.sentence_len.1);
    let tokens = (0..len)
        .map(|_| {
            let from_topic = shared.is_empty() || rng.random::<f64>() < spec.topic_purity;
            if from_topic {
                let words = &topic_words[topic];
                words[rng.random_range(0..words.len())].clone()
            } else {
                shared[rng.random_range(0..shared.len())].clone()
            }
        })
        .collect();
    Sentence { tokens }
}

/// Generates the corpus. Deterministic for a fixed seed; after the base
/// volume, targeted sentences top up any topic word still under
/// `min_word_count`.
pub fn gen_topic_corpus(spec: &TopicSpec) -> Result<TopicCorpus> {
    spec.validate()?;
    let topic_words: Vec<Vec<String>> = (0..spec.n_topics)
        .map(|t| (0..spec.words_per_topic).map(|j| topic_word(t, j)).collect())
        .collect();
    let shared: Vec<String> = (0..spec.shared_words).map(shared_word).collect();
    let mut word_origin = HashMap::new();
    for (t, words) in topic_words.iter().enumerate() {
        for w in words {
            word_origin.insert(w.clone(), WordOrigin::Topic(t));
        }
    }
    for w in &shared {
        word_origin.insert(w.clone(), WordOrigin::Shared);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut sentences = Vec::with_capacity(spec.n_sentences);
    let mut sentence_topics = Vec::with_capacity(spec.n_sentences);
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for _ in 0..spec.n_sentences {
        let topic = rng.random_range(0..spec.n_topics);
        let s = gen_sentence(&mut rng, spec, topic, &topic_words, &shared);
        for t in &s.tokens {
            if let Some(WordOrigin::Topic(_)) = word_origin.get(t) {
                let key = topic_words
                    .iter()
                    .flatten()
                    .find(|w| *w == t)
                    .map(|w| w.as_str())
                    .unwrap();
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        sentences.push(s);
        sentence_topics.push(topic);
    }

    // top-up: one sentence per deficient topic, built from its own
    // under-represented words, until the floor holds everywhere
    loop {
        let mut deficient: Vec<(usize, Vec<String>)> = Vec::new();
        for (t, words) in topic_words.iter().enumerate() {
            let missing: Vec<String> = words
                .iter()
                .filter(|w| counts.get(w.as_str()).copied().unwrap_or(0) < spec.min_word_count)
                .cloned()
                .collect();
            if !missing.is_empty() {
                deficient.push((t, missing));
            }
        }
        if deficient.is_empty() {
            break;
        }
        for (topic, missing) in deficient {
            for chunk in missing.chunks(spec.sentence_len.1.max(1)) {
                let mut tokens: Vec<String> = chunk.to_vec();
                while tokens.len() < spec.sentence_len.0 {
                    let words = &topic_words[topic];
                    tokens.push(words[rng.random_range(0..words.len())].clone());
                }
                for t in &tokens {
                    if let Some(WordOrigin::Topic(_)) = word_origin.get(t) {
                        let key = topic_words
                            .iter()
                            .flatten()
                            .find(|w| *w == t)
                            .map(|w| w.as_str())
                            .unwrap();
                        *counts.entry(key).or_insert(0) += 1;
                    }
                }
                sentences.push(Sentence { tokens });
                sentence_topics.push(topic);
            }
        }
    }

    Ok(TopicCorpus {
        sentences,
        sentence_topics,
        topic_words,
        shared,
        word_origin,
    })
}

/// One synthetic hospitalization.
#[derive(Debug, Clone)]
pub struct SynthEncounter {
    pub encounter_id: String,
    pub notes: Vec<String>,
    pub discharge_date: NaiveDate,
    pub readmit_lag: Option<i64>,
    pub label: u8,
    pub lace: f64,
    /// Fraction of the encounter's tokens drawn from topic 0 — the planted
    /// signal the label is tied to.
    pub topic_share: f64,
}

/// A corpus plus labeled encounters spanning both sides of the date cutoff.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub corpus: TopicCorpus,
    pub encounters: Vec<SynthEncounter>,
    /// Mean topic-0 share across encounters; the label model's centering.
    pub base_share: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates `n_encounters` encounters of 1–3 notes each. A per-encounter
/// propensity tilts its sentences toward topic 0; the label is Bernoulli of
/// `sigmoid(signal_beta * (topic share − mean share))`, so `signal_beta = 0`
/// gives coin-flip labels. `cutoff_fraction` of the encounters discharge
/// before the cutoff date.
pub fn gen_labeled_encounters(
    spec: &TopicSpec,
    n_encounters: usize,
    cutoff_fraction: f64,
    signal_beta: f64,
    cutoff: NaiveDate,
) -> Result<SynthDataset> {
    spec.validate()?;
    if n_encounters < 20 {
        return Err(Error::Param("n_encounters must be >= 20".into()));
    }
    if !(cutoff_fraction > 0.0 && cutoff_fraction < 1.0) {
        return Err(Error::Param("cutoff_fraction must be in (0, 1)".into()));
    }
    if !signal_beta.is_finite() || signal_beta < 0.0 {
        return Err(Error::Param("signal_beta must be finite and >= 0".into()));
    }
    let corpus = gen_topic_corpus(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed.wrapping_add(0x5f5e1));

    struct Draft {
        notes: Vec<String>,
        share: f64,
    }
    let mut drafts = Vec::with_capacity(n_encounters);
    for _ in 0..n_encounters {
        let propensity = rng.random::<f64>();
        let n_notes = rng.random_range(1..=3);
        let mut notes = Vec::with_capacity(n_notes);
        let mut topic0_tokens = 0usize;
        let mut total_tokens = 0usize;
        for _ in 0..n_notes {
            let n_sentences = rng.random_range(2..=4);
            let mut text = String::new();
            for _ in 0..n_sentences {
                let topic = if spec.n_topics == 1 || rng.random::<f64>() < propensity {
                    0
                } else {
                    rng.random_range(1..spec.n_topics)
                };
                let s = gen_sentence(&mut rng, spec, topic, &corpus.topic_words, &corpus.shared);
                for t in &s.tokens {
                    total_tokens += 1;
                    if matches!(corpus.word_origin.get(t), Some(WordOrigin::Topic(0))) {
                        topic0_tokens += 1;
                    }
                }
                text.push_str(&s.tokens.join(" "));
                text.push_str(". ");
            }
            notes.push(text.trim_end().to_string());
        }
        let share = if total_tokens == 0 {
            0.0
        } else {
            topic0_tokens as f64 / total_tokens as f64
        };
        drafts.push(Draft { notes, share });
    }
    let base_share = drafts.iter().map(|d| d.share).sum::<f64>() / n_encounters as f64;

    let n_train = ((cutoff_fraction * n_encounters as f64).round() as usize)
        .clamp(1, n_encounters - 1);
    let n_test = n_encounters - n_train;

    let mut encounters = Vec::with_capacity(n_encounters);
    for (e, draft) in drafts.into_iter().enumerate() {
        let p = sigmoid(signal_beta * (draft.share - base_share));
        let label = u8::from(rng.random::<f64>() < p);
        let readmit_lag = if label == 1 {
            Some(rng.random_range(1..=30))
        } else if rng.random::<f64>() < 0.6 {
            None
        } else {
            Some(rng.random_range(31..=365))
        };
        let lace = (6.0 + 8.0 * draft.share + rng.random_range(-2.0..2.0))
            .round()
            .clamp(0.0, 19.0);
        let discharge_date = if e < n_train {
            // spread over the 900 days before the cutoff
            let back = 1 + (e as i64) * 899 / n_train as i64;
            cutoff - Duration::days(back)
        } else {
            let fwd = ((e - n_train) as i64) * 183 / n_test as i64;
            cutoff + Duration::days(fwd)
        };
        encounters.push(SynthEncounter {
            encounter_id: (1_000_001 + e).to_string(),
            notes: draft.notes,
            discharge_date,
            readmit_lag,
            label,
            lace,
            topic_share: draft.share,
        });
    }

    Ok(SynthDataset {
        corpus,
        encounters,
        base_share,
    })
}

/// Writes the corpus as `shards` plain-text files, one sentence per line,
/// closed with a period so the cleaning path has delimiters to split on.
pub fn write_corpus_dir(corpus: &TopicCorpus, dir: &Path, shards: usize) -> Result<()> {
    let shards = shards.max(1);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let per = corpus.sentences.len().div_ceil(shards);
    for (i, chunk) in corpus.sentences.chunks(per.max(1)).enumerate() {
        let path = dir.join(format!("notes_{i:03}.txt"));
        let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        for s in chunk {
            writeln!(out, "{}.", s.tokens.join(" ")).map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Writes the notes CSV the corpus module consumes, one row per note.
pub fn write_notes_csv(encounters: &[SynthEncounter], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| crate::corpus::csv_error(path, e))?;
    writer
        .write_record(["PAT_ENC_CSN_ID", "NOTE_TEXT"])
        .map_err(|e| crate::corpus::csv_error(path, e))?;
    for enc in encounters {
        for note in &enc.notes {
            writer
                .write_record([enc.encounter_id.as_str(), note.as_str()])
                .map_err(|e| crate::corpus::csv_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the labels CSV the learn module consumes.
pub fn write_labels_csv(encounters: &[SynthEncounter], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "PAT_ENC_CSN_ID,READMITLAG,DISCHARGEDATE,LACE")
        .map_err(|e| Error::io(path, e))?;
    for enc in encounters {
        let lag = enc
            .readmit_lag
            .map(|l| l.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            enc.encounter_id,
            lag,
            enc.discharge_date.format("%Y-%m-%d"),
            enc.lace
        )
        .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes a seed list: the first `per_topic` words of every topic.
pub fn write_seed_file(corpus: &TopicCorpus, per_topic: usize, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for words in &corpus.topic_words {
        for w in words.iter().take(per_topic) {
            writeln!(out, "{w}").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
