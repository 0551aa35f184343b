//! Vocabulary building and skip-gram embedding training with negative
//! sampling, plus persistence in the word2vec text format.
//!
//! Training is hogwild-style: workers share the two weight matrices without
//! locks, racing on individual scalars. Bit-reproducibility is promised only
//! for `workers = 1` with a fixed seed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::SentenceSource;
use crate::error::{Error, Result};

/// Words meeting the count threshold, indexed densely. Index order is
/// descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    /// Sum of the retained words' corpus counts.
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Vocabulary for a model loaded from disk. The text format carries no
    /// frequencies, so every word gets count 1 and the file order is kept.
    fn from_loaded_words(words: Vec<String>, path: &Path) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Format(format!(
                    "{}: line {}: duplicate word {w:?}",
                    path.display(),
                    i + 2
                )));
            }
        }
        let total = words.len() as u64;
        Ok(Vocabulary {
            counts: vec![1; words.len()],
            words,
            index,
            total_tokens: total,
            min_count: 1,
        })
    }
}

/// Counts every token in the stream and keeps words with frequency at least
/// `min_count`.
pub fn build_vocab(source: &dyn SentenceSource, min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sentence in source.sentences() {
        for token in sentence?.tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut retained: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    if retained.is_empty() {
        return Err(Error::Train(format!(
            "empty vocabulary: no word occurs at least {min_count} times"
        )));
    }
    retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut words = Vec::with_capacity(retained.len());
    let mut word_counts = Vec::with_capacity(retained.len());
    let mut index = HashMap::with_capacity(retained.len());
    let mut total = 0u64;
    for (i, (word, count)) in retained.into_iter().enumerate() {
        index.insert(word.clone(), i);
        words.push(word);
        word_counts.push(count);
        total += count;
    }
    Ok(Vocabulary {
        words,
        counts: word_counts,
        index,
        total_tokens: total,
        min_count,
    })
}

/// Hyperparameters for embedding training.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dim: usize,
    /// Maximum context radius; the effective radius per center is drawn
    /// uniformly from 1..=window.
    pub window: usize,
    pub min_count: u64,
    /// Negative samples per (center, context) pair.
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub rng_seed: u64,
    pub workers: usize,
    /// Frequent-word downsampling threshold; 0 disables.
    pub subsample_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 500,
            window: 10,
            min_count: 100,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            rng_seed: 1,
            workers: 1,
            subsample_threshold: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Param("dim must be >= 1".into()));
        }
        if self.window < 1 {
            return Err(Error::Param("window must be >= 1".into()));
        }
        if self.negatives < 1 {
            return Err(Error::Param("negatives must be >= 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Param("epochs must be >= 1".into()));
        }
        if self.initial_lr.is_nan() || self.initial_lr <= 0.0 {
            return Err(Error::Param("initial_lr must be > 0".into()));
        }
        if self.workers < 1 {
            return Err(Error::Param("workers must be >= 1".into()));
        }
        if self.subsample_threshold < 0.0 {
            return Err(Error::Param("subsample_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// A vocabulary with its two V×D weight matrices. Consumers (similarity,
/// clustering, persistence) only ever see the input vectors; the output
/// matrix exists for training.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingModel {
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    /// Input (word) vector by vocabulary index.
    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Input vector by word.
    pub fn vector_of(&self, word: &str) -> Result<&[f64]> {
        let idx = self
            .vocab
            .index_of(word)
            .ok_or_else(|| Error::Lookup(word.to_string()))?;
        Ok(self.vector(idx))
    }

    /// Output (context) vector by vocabulary index. Training-internal.
    pub fn output_vector(&self, idx: usize) -> &[f64] {
        &self.output[idx * self.dim..(idx + 1) * self.dim]
    }

    #[cfg(test)]
    pub(crate) fn set_input_row(&mut self, idx: usize, row: &[f64]) {
        self.input[idx * self.dim..(idx + 1) * self.dim].copy_from_slice(row);
    }

    #[cfg(test)]
    pub(crate) fn set_output_row(&mut self, idx: usize, row: &[f64]) {
        self.output[idx * self.dim..(idx + 1) * self.dim].copy_from_slice(row);
    }

    /// Builds a model directly from words and input vectors (row-major,
    /// `words.len() * dim` entries). Used by tests and by `load_model`.
    pub fn from_vectors(words: Vec<String>, dim: usize, input: Vec<f64>) -> Result<Self> {
        let n = input.len();
        Self::from_matrices(words, dim, input, vec![0.0; n])
    }

    /// Builds a model with both matrices supplied.
    pub fn from_matrices(
        words: Vec<String>,
        dim: usize,
        input: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("dim must be >= 1".into()));
        }
        if input.len() != words.len() * dim || output.len() != words.len() * dim {
            return Err(Error::Param(format!(
                "matrices must have {} entries, got {} and {}",
                words.len() * dim,
                input.len(),
                output.len()
            )));
        }
        let vocab = Vocabulary::from_loaded_words(words, Path::new("<memory>"))?;
        Ok(EmbeddingModel {
            vocab,
            dim,
            input,
            output,
        })
    }

    /// Row-major V×D input matrix.
    pub fn input_matrix(&self) -> &[f64] {
        &self.input
    }

    /// Row-major V×D output matrix.
    pub fn output_matrix(&self) -> &[f64] {
        &self.output
    }
}

/// Fresh model: input entries uniform in [-0.5/D, +0.5/D) from the seed,
/// output matrix all zero.
pub fn init_model(vocab: Vocabulary, config: &TrainConfig) -> Result<EmbeddingModel> {
    if vocab.is_empty() {
        return Err(Error::Train("empty vocabulary".into()));
    }
    if config.dim < 1 {
        return Err(Error::Param("dim must be >= 1".into()));
    }
    let dim = config.dim;
    let n = vocab.len() * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut input = Vec::with_capacity(n);
    for _ in 0..n {
        input.push((rng.random::<f64>() - 0.5) / dim as f64);
    }
    Ok(EmbeddingModel {
        vocab,
        dim,
        input,
        output: vec![0.0; n],
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss and analytic gradients for one skip-gram pair with its negatives.
#[derive(Debug, Clone)]
pub struct SgnsGrads {
    pub loss: f64,
    /// dL/d(input row of the center word).
    pub center: Vec<f64>,
    /// dL/d(output row), per touched output row; repeated negatives merge.
    pub outputs: Vec<(usize, Vec<f64>)>,
}

/// Core arithmetic shared by the public gradient API and the training loop.
/// `outputs` holds (row index, output row, is-positive) triples: the context
/// first, then the negatives.
fn sgns_pair_core(v_center: &[f64], outputs: &[(usize, &[f64], bool)]) -> SgnsGrads {
    let dim = v_center.len();
    let mut loss = 0.0;
    let mut center = vec![0.0; dim];
    let mut grads: Vec<(usize, Vec<f64>)> = Vec::with_capacity(outputs.len());
    for &(row, u, positive) in outputs {
        let z: f64 = u.iter().zip(v_center).map(|(a, b)| a * b).sum();
        // loss −log σ(z) for the positive, −log σ(−z) per negative
        loss += if positive { softplus(-z) } else { softplus(z) };
        let g = sigmoid(z) - if positive { 1.0 } else { 0.0 };
        for d in 0..dim {
            center[d] += g * u[d];
        }
        match grads.iter_mut().find(|(r, _)| *r == row) {
            Some((_, acc)) => {
                for d in 0..dim {
                    acc[d] += g * v_center[d];
                }
            }
            None => grads.push((row, v_center.iter().map(|v| g * v).collect())),
        }
    }
    SgnsGrads {
        loss,
        center,
        outputs: grads,
    }
}

/// Loss and exact gradients of
/// `−log σ(u_ctx·v_c) − Σ_neg log σ(−u_neg·v_c)`
/// for one (center, context, negatives) sample.
pub fn sgns_pair_loss_and_grads(
    model: &EmbeddingModel,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> Result<SgnsGrads> {
    let v = model.len();
    for &idx in [center, context].iter().chain(negatives) {
        if idx >= v {
            return Err(Error::Param(format!(
                "word index {idx} out of range (vocabulary size {v})"
            )));
        }
    }
    let mut outputs: Vec<(usize, &[f64], bool)> = Vec::with_capacity(1 + negatives.len());
    outputs.push((context, model.output_vector(context), true));
    for &n in negatives {
        outputs.push((n, model.output_vector(n), false));
    }
    Ok(sgns_pair_core(model.vector(center), &outputs))
}

/// Cumulative unigram^0.75 distribution for negative sampling.
struct NegativeTable {
    cum: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    fn new(vocab: &Vocabulary) -> Self {
        let mut cum = Vec::with_capacity(vocab.len());
        let mut acc = 0.0;
        for i in 0..vocab.len() {
            acc += (vocab.count(i) as f64).powf(0.75);
            cum.push(acc);
        }
        NegativeTable { cum, total: acc }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.random::<f64>() * self.total;
        self.cum
            .partition_point(|&c| c <= u)
            .min(self.cum.len() - 1)
    }
}

/// Shared weight matrix for lock-free training. Reads and writes are relaxed
/// loads/stores of f64 bits; racing workers may clobber each other per
/// scalar, which is accepted.
struct HogwildMatrix {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl HogwildMatrix {
    fn from_vec(data: Vec<f64>, dim: usize) -> Self {
        HogwildMatrix {
            dim,
            cells: data
                .into_iter()
                .map(|x| AtomicU64::new(x.to_bits()))
                .collect(),
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }

    fn copy_row(&self, row: usize, buf: &mut [f64]) {
        let base = row * self.dim;
        for (d, slot) in buf.iter_mut().enumerate() {
            *slot = f64::from_bits(self.cells[base + d].load(Ordering::Relaxed));
        }
    }

    /// row += scale * delta, element-wise load/store.
    fn add_row(&self, row: usize, delta: &[f64], scale: f64) {
        let base = row * self.dim;
        for (d, &g) in delta.iter().enumerate() {
            let cell = &self.cells[base + d];
            let cur = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((cur + scale * g).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Trains the model over the stream. Per center token: draw an effective
/// radius in 1..=window, pair with surviving in-window tokens, draw
/// negatives from unigram^0.75 (excluding the positive context), step.
/// The learning rate decays linearly from `initial_lr` to `initial_lr/1e4`
/// over epochs × corpus token count. `epochs = 0` returns the model
/// untouched.
pub fn train(
    model: EmbeddingModel,
    source: &dyn SentenceSource,
    config: &TrainConfig,
) -> Result<EmbeddingModel> {
    if config.epochs == 0 {
        return Ok(model);
    }
    if config.workers < 1 {
        return Err(Error::Param("workers must be >= 1".into()));
    }
    if config.negatives < 1 {
        return Err(Error::Param("negatives must be >= 1".into()));
    }
    if config.window < 1 {
        return Err(Error::Param("window must be >= 1".into()));
    }
    let EmbeddingModel {
        vocab,
        dim,
        input,
        output,
    } = model;
    let input = HogwildMatrix::from_vec(input, dim);
    let output = HogwildMatrix::from_vec(output, dim);
    let table = NegativeTable::new(&vocab);
    let scheduled = (config.epochs as u64).saturating_mul(vocab.total_tokens()).max(1);
    let progress = AtomicU64::new(0);
    let first_error: Mutex<Option<Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for wid in 0..config.workers {
            let vocab = &vocab;
            let input = &input;
            let output = &output;
            let table = &table;
            let progress = &progress;
            let first_error = &first_error;
            scope.spawn(move || {
                let result = train_worker(
                    wid, config, vocab, source, input, output, table, progress, scheduled,
                );
                if let Err(e) = result {
                    let mut slot = first_error.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                }
            });
        }
    });

    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(EmbeddingModel {
        vocab,
        dim,
        input: input.into_vec(),
        output: output.into_vec(),
    })
}

#[allow(clippy::too_many_arguments)]
fn train_worker(
    wid: usize,
    config: &TrainConfig,
    vocab: &Vocabulary,
    source: &dyn SentenceSource,
    input: &HogwildMatrix,
    output: &HogwildMatrix,
    table: &NegativeTable,
    progress: &AtomicU64,
    scheduled: u64,
) -> Result<()> {
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_add(wid as u64));
    let mut v_center = vec![0.0; dim];
    let subsample_k = config.subsample_threshold * vocab.total_tokens() as f64;

    for _epoch in 0..config.epochs {
        for (si, sentence) in source.sentences().enumerate() {
            let sentence = sentence?;
            if si % config.workers != wid {
                continue;
            }
            // Out-of-vocabulary tokens are dropped before windowing.
            let mut ids: Vec<usize> = sentence
                .tokens
                .iter()
                .filter_map(|t| vocab.index_of(t))
                .collect();
            if config.subsample_threshold > 0.0 {
                ids.retain(|&id| {
                    let f = vocab.count(id) as f64;
                    let keep = ((f / subsample_k).sqrt() + 1.0) * (subsample_k / f);
                    keep >= rng.random::<f64>()
                });
            }
            for i in 0..ids.len() {
                let t = progress.fetch_add(1, Ordering::Relaxed);
                let lr = config.initial_lr
                    * (1.0 - t as f64 / scheduled as f64).max(1e-4);
                let radius = rng.random_range(1..=config.window);
                let center = ids[i];
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(ids.len().saturating_sub(1));
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = ids[j];
                    input.copy_row(center, &mut v_center);
                    let mut rows: Vec<(usize, Vec<f64>, bool)> =
                        Vec::with_capacity(1 + config.negatives);
                    let mut u = vec![0.0; dim];
                    output.copy_row(context, &mut u);
                    rows.push((context, u, true));
                    for _ in 0..config.negatives {
                        // redraw to exclude the positive context; bail out if
                        // the vocabulary has no other mass to offer
                        let mut neg = None;
                        for _attempt in 0..1000 {
                            let n = table.sample(&mut rng);
                            if n != context {
                                neg = Some(n);
                                break;
                            }
                        }
                        let Some(neg) = neg else { continue };
                        let mut u = vec![0.0; dim];
                        output.copy_row(neg, &mut u);
                        rows.push((neg, u, false));
                    }
                    let refs: Vec<(usize, &[f64], bool)> = rows
                        .iter()
                        .map(|(r, u, p)| (*r, u.as_slice(), *p))
                        .collect();
                    let grads = sgns_pair_core(&v_center, &refs);
                    input.add_row(center, &grads.center, -lr);
                    for (row, g) in &grads.outputs {
                        output.add_row(*row, g, -lr);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes the model in word2vec text format: header `V D`, then one
/// `word v1 … vD` line per word in vocabulary order. Only input vectors are
/// persisted. Floats print in shortest round-trip form, so a reload is
/// bit-exact.
pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |e: std::io::Error| Error::io(path, e);
    writeln!(out, "{} {}", model.len(), model.dim()).map_err(write)?;
    for i in 0..model.len() {
        write!(out, "{}", model.vocab().word(i)).map_err(write)?;
        for x in model.vector(i) {
            write!(out, " {x}").map_err(write)?;
        }
        writeln!(out).map_err(write)?;
    }
    out.flush().map_err(write)?;
    Ok(())
}

/// Reads a word2vec text-format model. Errors carry the offending line
/// number (the header is line 1).
pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_model_from_reader(BufReader::new(file), path)
}

/// Parses word2vec text from any reader; separated out so fuzzing can feed
/// it arbitrary bytes without touching the filesystem.
pub fn load_model_from_reader(reader: impl BufRead, path: &Path) -> Result<EmbeddingModel> {
    let fmt = |line: usize, msg: String| {
        Error::Format(format!("{}: line {line}: {msg}", path.display()))
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(Error::io(path, e)),
        None => return Err(fmt(1, "empty file, expected 'V D' header".into())),
    };
    let mut parts = header.split_whitespace();
    let v: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fmt(1, format!("bad header {header:?}, expected 'V D'")))?;
    let d: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| fmt(1, format!("bad header {header:?}, expected 'V D'")))?;
    if parts.next().is_some() {
        return Err(fmt(1, format!("bad header {header:?}, expected 'V D'")));
    }
    if v == 0 || d == 0 {
        return Err(fmt(1, format!("header declares {v} words x {d} dims")));
    }

    let mut words = Vec::with_capacity(v);
    let mut input = Vec::with_capacity(v * d);
    let mut row = 0usize;
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if row == v {
            if line.trim().is_empty() {
                continue;
            }
            return Err(fmt(line_no, format!("expected {v} vector rows")));
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| fmt(line_no, "empty row".into()))?;
        let mut vec_row = Vec::with_capacity(d);
        for field in fields {
            let x: f64 = field
                .parse()
                .map_err(|_| fmt(line_no, format!("bad float {field:?}")))?;
            if !x.is_finite() {
                return Err(fmt(line_no, format!("non-finite entry {field:?}")));
            }
            vec_row.push(x);
        }
        if vec_row.len() != d {
            return Err(fmt(
                line_no,
                format!("expected {d} columns, found {}", vec_row.len()),
            ));
        }
        words.push(word.to_string());
        input.extend_from_slice(&vec_row);
        row += 1;
    }
    if row != v {
        return Err(fmt(row + 2, format!("expected {v} vector rows, found {row}")));
    }
    let vocab = Vocabulary::from_loaded_words(words, path)?;
    let output = vec![0.0; v * d];
    Ok(EmbeddingModel {
        vocab,
        dim: d,
        input,
        output,
    })
}
