//! Similarity queries and clustering over the embedding matrix, plus the
//! CSV formats downstream feature extraction consumes.

mod kmeans;

pub use kmeans::{spherical_kmeans, KmeansOutcome, KmeansParams};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::{csv_error, find_column};
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Param(format!(
            "vector lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Domain("cosine of zero vector".into()));
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// The `topn` vocabulary words closest to `word` by cosine over input
/// vectors, descending, query excluded, ties broken by vocabulary index.
pub fn most_similar(
    model: &EmbeddingModel,
    word: &str,
    topn: usize,
) -> Result<Vec<(String, f64)>> {
    if topn == 0 {
        return Err(Error::Param("topn must be >= 1".into()));
    }
    let query_idx = model
        .vocab()
        .index_of(word)
        .ok_or_else(|| Error::Lookup(word.to_string()))?;
    let query = model.vector(query_idx);
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(model.len().saturating_sub(1));
    for i in 0..model.len() {
        if i == query_idx {
            continue;
        }
        scored.push((i, cosine_similarity(query, model.vector(i))?));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(topn);
    Ok(scored
        .into_iter()
        .map(|(i, s)| (model.vocab().word(i).to_string(), s))
        .collect())
}

/// A seed word with its closest neighbors. `entries[0]` is always the seed
/// itself at score 1.0; the rest descend.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedBag {
    pub seed: String,
    pub entries: Vec<(String, f64)>,
}

impl SeedBag {
    /// Score lookup across the whole bag (seed included).
    pub fn score_of(&self, word: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|&(_, s)| s)
    }
}

/// Builds the seed's bag: the seed at 1.0 followed by its `topn` nearest
/// neighbors.
pub fn build_seed_bag(model: &EmbeddingModel, seed: &str, topn: usize) -> Result<SeedBag> {
    let mut entries = vec![(seed.to_string(), 1.0)];
    entries.extend(most_similar(model, seed, topn)?);
    Ok(SeedBag {
        seed: seed.to_string(),
        entries,
    })
}

/// k unit prototypes plus a word-to-cluster assignment over the model
/// vocabulary. Cluster ids are 1-based everywhere outside the k-means core,
/// matching the file formats.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    k: usize,
    dim: usize,
    prototypes: Vec<f64>,
    words: Vec<String>,
    assignment: Vec<u32>,
    index: HashMap<String, usize>,
}

impl ClusterModel {
    /// Clusters the model's input vectors. Zero rows are rejected before
    /// clustering.
    pub fn fit(model: &EmbeddingModel, params: &KmeansParams) -> Result<(Self, KmeansOutcome)> {
        let dim = model.dim();
        let mut data = Vec::with_capacity(model.len() * dim);
        for i in 0..model.len() {
            data.extend_from_slice(model.vector(i));
        }
        let outcome = spherical_kmeans(&data, dim, params)?;
        let words: Vec<String> = model.vocab().words().to_vec();
        let assignment: Vec<u32> = outcome.assignment.iter().map(|&c| c + 1).collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok((
            ClusterModel {
                k: params.k,
                dim,
                prototypes: outcome.prototypes.clone(),
                words,
                assignment,
                index,
            },
            outcome,
        ))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// 1-based cluster id per word, aligned with `words()`.
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn cluster_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).map(|&i| self.assignment[i])
    }

    /// Prototype row for a 1-based cluster id.
    pub fn prototype(&self, cluster_id: u32) -> Result<&[f64]> {
        let c = self.check_cluster(cluster_id)?;
        Ok(&self.prototypes[c * self.dim..(c + 1) * self.dim])
    }

    /// Word indices assigned to a cluster, in vocabulary order.
    pub fn members(&self, cluster_id: u32) -> Result<Vec<usize>> {
        self.check_cluster(cluster_id)?;
        Ok(self
            .assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster_id)
            .map(|(i, _)| i)
            .collect())
    }

    fn check_cluster(&self, cluster_id: u32) -> Result<usize> {
        if cluster_id == 0 || cluster_id as usize > self.k {
            return Err(Error::Param(format!(
                "cluster id {cluster_id} out of range 1..={}",
                self.k
            )));
        }
        Ok((cluster_id - 1) as usize)
    }

    /// The assignment alone, as feature extraction consumes it.
    pub fn word_map(&self) -> WordClusterMap {
        WordClusterMap {
            k: self.k,
            map: self
                .words
                .iter()
                .cloned()
                .zip(self.assignment.iter().copied())
                .collect(),
        }
    }
}

/// Cosine similarity between a word's vector and a cluster prototype.
pub fn cluster_similarity(
    model: &EmbeddingModel,
    clusters: &ClusterModel,
    cluster_id: u32,
    word: &str,
) -> Result<f64> {
    cosine_similarity(model.vector_of(word)?, clusters.prototype(cluster_id)?)
}

/// The `n` member words that fit the cluster best, descending similarity.
pub fn cluster_representatives(
    model: &EmbeddingModel,
    clusters: &ClusterModel,
    cluster_id: u32,
    n: usize,
) -> Result<Vec<(String, f64)>> {
    let mut scored = Vec::new();
    for idx in clusters.members(cluster_id)? {
        let word = &clusters.words()[idx];
        scored.push((idx, word.clone(), cluster_similarity(model, clusters, cluster_id, word)?));
    }
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored.into_iter().map(|(_, w, s)| (w, s)).collect())
}

/// Just the word → cluster assignment, as read back from the clusters CSV.
#[derive(Debug, Clone)]
pub struct WordClusterMap {
    pub k: usize,
    map: HashMap<String, u32>,
}

impl WordClusterMap {
    pub fn cluster_of(&self, word: &str) -> Option<u32> {
        self.map.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Per word: its cluster and the cosine similarity to that cluster's
/// prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct WordClusterSimTable {
    pub k: usize,
    rows: Vec<(String, u32, f64)>,
    index: HashMap<String, usize>,
}

impl WordClusterSimTable {
    fn from_rows(k: usize, rows: Vec<(String, u32, f64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, (word, cluster, sim)) in rows.iter().enumerate() {
            if *cluster == 0 || *cluster as usize > k {
                return Err(Error::Format(format!(
                    "word {word:?}: cluster {cluster} out of range 1..={k}"
                )));
            }
            if !sim.is_finite() || sim.abs() > 1.0 + 1e-9 {
                return Err(Error::Format(format!(
                    "word {word:?}: similarity {sim} outside [-1, 1]"
                )));
            }
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate word {word:?}")));
            }
        }
        Ok(WordClusterSimTable { k, rows, index })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(String, u32, f64)] {
        &self.rows
    }

    pub fn lookup(&self, word: &str) -> Option<(u32, f64)> {
        self.index
            .get(word)
            .map(|&i| (self.rows[i].1, self.rows[i].2))
    }
}

/// Records each vocabulary word's cluster and its similarity to that
/// cluster's prototype.
pub fn build_sim_table(
    model: &EmbeddingModel,
    clusters: &ClusterModel,
) -> Result<WordClusterSimTable> {
    if clusters.words() != model.vocab().words() {
        return Err(Error::Param(
            "cluster model does not cover the embedding vocabulary".into(),
        ));
    }
    let mut rows = Vec::with_capacity(model.len());
    for (i, word) in clusters.words().iter().enumerate() {
        let cluster = clusters.assignment()[i];
        let sim = cluster_similarity(model, clusters, cluster, word)?;
        rows.push((word.clone(), cluster, sim));
    }
    WordClusterSimTable::from_rows(clusters.k(), rows)
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Writes a seed bag as headerless `word,score` rows, neighbors only — the
/// seed's own score-1.0 entry is implicit and re-added on read.
pub fn write_seed_bag_csv(bag: &SeedBag, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (word, score) in bag.entries.iter().skip(1) {
        writeln!(out, "{word},{score}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a headerless `word,score` bag file; `seed` (scored 1.0) is placed
/// first. Scores must be finite, within [-1, 1], and non-increasing.
pub fn read_seed_bag_csv(path: &Path, seed: &str) -> Result<SeedBag> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_seed_bag_from_reader(file, seed, path)
}

pub fn read_seed_bag_from_reader(
    reader: impl std::io::Read,
    seed: &str,
    path: &Path,
) -> Result<SeedBag> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut entries = vec![(seed.to_string(), 1.0)];
    let mut seen: HashMap<String, ()> = HashMap::new();
    seen.insert(seed.to_string(), ());
    let mut prev = f64::INFINITY;
    for (i, record) in csv.records().enumerate() {
        let line = i + 1;
        let record = record
            .map_err(|e| Error::Format(format!("{}: line {line}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(Error::Format(format!(
                "{}: line {line}: expected word,score",
                path.display()
            )));
        }
        let word = record[0].to_string();
        let score: f64 = record[1].parse().map_err(|_| {
            Error::Format(format!(
                "{}: line {line}: bad score {:?}",
                path.display(),
                &record[1]
            ))
        })?;
        if !score.is_finite() || score.abs() > 1.0 + 1e-9 {
            return Err(Error::Format(format!(
                "{}: line {line}: score {score} outside [-1, 1]",
                path.display()
            )));
        }
        if score > prev + 1e-12 {
            return Err(Error::Format(format!(
                "{}: line {line}: scores must be non-increasing",
                path.display()
            )));
        }
        if seen.insert(word.clone(), ()).is_some() {
            return Err(Error::Format(format!(
                "{}: line {line}: duplicate word {word:?}",
                path.display()
            )));
        }
        prev = score;
        entries.push((word, score));
    }
    Ok(SeedBag {
        seed: seed.to_string(),
        entries,
    })
}

/// Seed name carried by a bag file's name (`<seed>.csv`).
pub fn seed_from_path(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.to_string())
        .ok_or_else(|| Error::Param(format!("bag filename carries no seed: {}", path.display())))
}

/// Writes `word,cluster` rows (1-based ids) in vocabulary order.
pub fn write_clusters_csv(clusters: &ClusterModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "word,cluster").map_err(|e| Error::io(path, e))?;
    for (word, cluster) in clusters.words().iter().zip(clusters.assignment()) {
        writeln!(out, "{word},{cluster}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `word,cluster` file. Extra columns (such as a leading row-index
/// column) are ignored; `k` is the largest cluster id seen.
pub fn read_clusters_csv(path: &Path) -> Result<WordClusterMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_clusters_from_reader(file, path)
}

pub fn read_clusters_from_reader(
    reader: impl std::io::Read,
    path: &Path,
) -> Result<WordClusterMap> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(|e| csv_error(path, e))?.clone();
    let word_col = find_column(&headers, "word", path)?;
    let cluster_col = find_column(&headers, "cluster", path)?;
    let mut map = HashMap::new();
    let mut k = 0usize;
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record
            .map_err(|e| Error::Format(format!("{}: line {line}: {e}", path.display())))?;
        let word = record.get(word_col).unwrap_or("").to_string();
        let cluster: u32 = record
            .get(cluster_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| {
                Error::Format(format!("{}: line {line}: bad cluster id", path.display()))
            })?;
        if cluster == 0 {
            return Err(Error::Format(format!(
                "{}: line {line}: cluster ids are 1-based",
                path.display()
            )));
        }
        if map.insert(word, cluster).is_some() {
            return Err(Error::Format(format!(
                "{}: line {line}: duplicate word",
                path.display()
            )));
        }
        k = k.max(cluster as usize);
    }
    Ok(WordClusterMap { k, map })
}

/// Writes the flattened sim table: `word,cluster,similarity`.
pub fn write_sim_table_csv(table: &WordClusterSimTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "word,cluster,similarity").map_err(|e| Error::io(path, e))?;
    for (word, cluster, sim) in table.rows() {
        writeln!(out, "{word},{cluster},{sim}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a sim table in either layout: the flat `word,cluster,similarity`
/// form, or the sparse k-column form (`word,cluster1Sim,…,clusterKSim`, one
/// nonzero per row, optional leading index column).
pub fn read_sim_table_csv(path: &Path) -> Result<WordClusterSimTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sim_table_from_reader(file, path)
}

pub fn read_sim_table_from_reader(
    reader: impl std::io::Read,
    path: &Path,
) -> Result<WordClusterSimTable> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(|e| csv_error(path, e))?.clone();

    let flat = headers.iter().any(|h| h == "cluster")
        && headers.iter().any(|h| h == "similarity");
    if flat {
        let word_col = find_column(&headers, "word", path)?;
        let cluster_col = find_column(&headers, "cluster", path)?;
        let sim_col = find_column(&headers, "similarity", path)?;
        let mut rows = Vec::new();
        let mut k = 0usize;
        for (i, record) in csv.records().enumerate() {
            let line = i + 2;
            let record = record
                .map_err(|e| Error::Format(format!("{}: line {line}: {e}", path.display())))?;
            let word = record.get(word_col).unwrap_or("").to_string();
            let cluster: u32 = record.get(cluster_col).unwrap_or("").parse().map_err(|_| {
                Error::Format(format!("{}: line {line}: bad cluster id", path.display()))
            })?;
            let sim: f64 = record.get(sim_col).unwrap_or("").parse().map_err(|_| {
                Error::Format(format!("{}: line {line}: bad similarity", path.display()))
            })?;
            k = k.max(cluster as usize);
            rows.push((word, cluster, sim));
        }
        return WordClusterSimTable::from_rows(k, rows);
    }

    // Sparse layout: every column named cluster<N>Sim holds that cluster's
    // similarity, zero except in the word's own cluster.
    let word_col = find_column(&headers, "word", path)?;
    let mut sim_cols: Vec<(usize, u32)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(n) = h
            .strip_prefix("cluster")
            .and_then(|rest| rest.strip_suffix("Sim"))
            .and_then(|n| n.parse::<u32>().ok())
        {
            if n >= 1 {
                sim_cols.push((i, n));
            }
        }
    }
    if sim_cols.is_empty() {
        return Err(Error::Schema(format!(
            "{}: neither flat (word,cluster,similarity) nor sparse (cluster<N>Sim) layout",
            path.display()
        )));
    }
    let k = sim_cols.iter().map(|&(_, n)| n as usize).max().unwrap_or(0);
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record
            .map_err(|e| Error::Format(format!("{}: line {line}: {e}", path.display())))?;
        let word = record.get(word_col).unwrap_or("").to_string();
        let mut hit: Option<(u32, f64)> = None;
        for &(col, cluster) in &sim_cols {
            let raw = record.get(col).unwrap_or("0");
            let sim: f64 = raw.parse().map_err(|_| {
                Error::Format(format!("{}: line {line}: bad similarity {raw:?}", path.display()))
            })?;
            if sim != 0.0 {
                if hit.is_some() {
                    return Err(Error::Format(format!(
                        "{}: line {line}: multiple nonzero similarities",
                        path.display()
                    )));
                }
                hit = Some((cluster, sim));
            }
        }
        let (cluster, sim) = hit.ok_or_else(|| {
            Error::Format(format!(
                "{}: line {line}: no nonzero similarity for {word:?}",
                path.display()
            ))
        })?;
        rows.push((word, cluster, sim));
    }
    WordClusterSimTable::from_rows(k, rows)
}
