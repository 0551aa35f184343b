//! Turns cleaned notes into numeric features: seed-bag closeness-squared
//! scores and per-cluster percentage/affinity scores, aggregated per
//! encounter.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::corpus::{csv_error, find_column, CleanNote};
use crate::error::{Error, Result};
use crate::vecops::{SeedBag, WordClusterMap, WordClusterSimTable};

/// The hand-curated seed terms shipped with the tool, one per line,
/// duplicates and spelling variants included on purpose.
pub const DEFAULT_SEEDS: &str = include_str!("../data/copd_seeds.txt");

/// Parses a seed list: one word per line, blanks skipped, duplicates kept.
pub fn parse_seed_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect()
}

/// Reads a seed list file.
pub fn read_seed_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_seed_list(&text))
}

/// Sum over the note's DISTINCT tokens that appear in the bag of the squared
/// bag score. Token repetition does not change the result.
pub fn bag_score(note_tokens: &[String], bag: &SeedBag) -> f64 {
    let present: HashSet<&str> = note_tokens.iter().map(|t| t.as_str()).collect();
    bag.entries
        .iter()
        .filter(|(word, _)| present.contains(word.as_str()))
        .map(|&(_, score)| score * score)
        .sum()
}

/// Sums per-note values by encounter id, keyed in first-seen order.
pub fn aggregate_by_encounter(
    values: impl IntoIterator<Item = (String, f64)>,
) -> IndexMap<String, f64> {
    let mut out: IndexMap<String, f64> = IndexMap::new();
    for (encounter, value) in values {
        *out.entry(encounter).or_insert(0.0) += value;
    }
    out
}

/// Fraction of the note's token OCCURRENCES assigned to each cluster.
/// Out-of-vocabulary tokens count in the denominator only, so the entries
/// sum to the in-vocabulary fraction, not 1. Empty note → all zeros.
pub fn cluster_percentages(note_tokens: &[String], clusters: &WordClusterMap) -> Vec<f64> {
    let mut counts = vec![0u64; clusters.k];
    let total = note_tokens.len();
    if total == 0 {
        return vec![0.0; clusters.k];
    }
    for token in note_tokens {
        if let Some(c) = clusters.cluster_of(token) {
            counts[(c - 1) as usize] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect()
}

/// Per cluster: sum of squared word-to-prototype similarity over the note's
/// DISTINCT in-vocabulary words assigned to that cluster.
pub fn cluster_affinities(note_tokens: &[String], sims: &WordClusterSimTable) -> Vec<f64> {
    let mut out = vec![0.0; sims.k];
    let distinct: HashSet<&str> = note_tokens.iter().map(|t| t.as_str()).collect();
    for word in distinct {
        if let Some((cluster, sim)) = sims.lookup(word) {
            out[(cluster - 1) as usize] += sim * sim;
        }
    }
    out
}

/// Per-encounter rows of named numeric features. Encounter ids are unique
/// and keep first-seen order; every row has every column. `NaN` marks a
/// value missing after an outer-join merge — freshly built tables have none.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    columns: Vec<String>,
    rows: IndexMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(columns: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.clone()) {
                return Err(Error::Schema(format!("duplicate feature column {c:?}")));
            }
        }
        Ok(FeatureTable {
            columns,
            rows: IndexMap::new(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert_row(&mut self, encounter_id: String, values: Vec<f64>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "row for {encounter_id:?} has {} values, expected {}",
                values.len(),
                self.columns.len()
            )));
        }
        if self.rows.insert(encounter_id.clone(), values).is_some() {
            return Err(Error::Schema(format!(
                "duplicate encounter id {encounter_id:?}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, encounter_id: &str) -> Option<&[f64]> {
        self.rows.get(encounter_id).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &[f64])> {
        self.rows.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Outer join on encounter id; columns concatenate in argument order and
    /// absent cells become NaN.
    pub fn merge(tables: &[FeatureTable]) -> Result<FeatureTable> {
        let mut columns = Vec::new();
        for t in tables {
            columns.extend(t.columns.iter().cloned());
        }
        let mut merged = FeatureTable::new(columns)?;
        let mut ids: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for t in tables {
            for id in t.rows.keys() {
                if seen.insert(id.clone()) {
                    ids.push(id.clone());
                }
            }
        }
        for id in ids {
            let mut row = Vec::with_capacity(merged.columns.len());
            for t in tables {
                match t.get(&id) {
                    Some(values) => row.extend_from_slice(values),
                    None => row.extend(std::iter::repeat_n(f64::NAN, t.columns.len())),
                }
            }
            merged.insert_row(id, row)?;
        }
        Ok(merged)
    }
}

/// What to score notes with.
pub enum FeatureExtractor<'a> {
    Bags(&'a [SeedBag]),
    ClusterPercentage(&'a WordClusterMap),
    ClusterAffinity(&'a WordClusterSimTable),
}

/// A built table plus the encounters dropped under strict compatibility.
pub struct FeatureBuild {
    pub table: FeatureTable,
    pub dropped_encounters: Vec<String>,
}

/// Scores every note and aggregates per encounter. Bag and affinity modes
/// score each note separately and sum across an encounter's notes;
/// percentage mode pools all of an encounter's tokens first. With
/// `strict_compat`, cluster modes drop encounters whose pooled token count
/// is zero instead of emitting all-zero rows.
pub fn build_feature_table(
    notes: &[CleanNote],
    extractor: &FeatureExtractor,
    strict_compat: bool,
) -> Result<FeatureBuild> {
    // encounter order and pooled tokens
    let mut pooled: IndexMap<String, Vec<String>> = IndexMap::new();
    for note in notes {
        pooled
            .entry(note.encounter_id.clone())
            .or_default()
            .extend(note.tokens.iter().cloned());
    }

    let columns: Vec<String> = match extractor {
        FeatureExtractor::Bags(bags) => bags.iter().map(|b| b.seed.clone()).collect(),
        FeatureExtractor::ClusterPercentage(map) => cluster_columns(map.k),
        FeatureExtractor::ClusterAffinity(sims) => cluster_columns(sims.k),
    };
    let mut table = FeatureTable::new(columns)?;
    let mut dropped = Vec::new();

    match extractor {
        FeatureExtractor::Bags(bags) => {
            let mut sums: IndexMap<String, Vec<f64>> = IndexMap::new();
            for id in pooled.keys() {
                sums.insert(id.clone(), vec![0.0; bags.len()]);
            }
            for note in notes {
                let row = sums.get_mut(&note.encounter_id).unwrap();
                for (j, bag) in bags.iter().enumerate() {
                    row[j] += bag_score(&note.tokens, bag);
                }
            }
            for (id, row) in sums {
                table.insert_row(id, row)?;
            }
        }
        FeatureExtractor::ClusterPercentage(map) => {
            for (id, tokens) in &pooled {
                if strict_compat && tokens.is_empty() {
                    dropped.push(id.clone());
                    continue;
                }
                table.insert_row(id.clone(), cluster_percentages(tokens, map))?;
            }
        }
        FeatureExtractor::ClusterAffinity(sims) => {
            let mut sums: IndexMap<String, Vec<f64>> = IndexMap::new();
            for id in pooled.keys() {
                sums.insert(id.clone(), vec![0.0; sims.k]);
            }
            for note in notes {
                let row = sums.get_mut(&note.encounter_id).unwrap();
                for (j, v) in cluster_affinities(&note.tokens, sims).into_iter().enumerate() {
                    row[j] += v;
                }
            }
            for (id, row) in sums {
                if strict_compat && pooled[&id].is_empty() {
                    dropped.push(id);
                    continue;
                }
                table.insert_row(id, row)?;
            }
        }
    }

    Ok(FeatureBuild {
        table,
        dropped_encounters: dropped,
    })
}

fn cluster_columns(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("cluster{i}")).collect()
}

/// Writes one seed's feature column: header `PAT_ENC_CSN_ID,<seed>`.
pub fn write_seed_feature_csv(table: &FeatureTable, column: &str, path: &Path) -> Result<()> {
    let col = table
        .columns()
        .iter()
        .position(|c| c == column)
        .ok_or_else(|| Error::Schema(format!("no feature column {column:?}")))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "PAT_ENC_CSN_ID,{column}").map_err(|e| Error::io(path, e))?;
    for (id, row) in table.iter() {
        writeln!(out, "{id},{}", row[col]).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a single-seed feature file back into a one-column table.
pub fn read_seed_feature_csv(path: &Path) -> Result<FeatureTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_seed_feature_from_reader(BufReader::new(file), path)
}

pub fn read_seed_feature_from_reader(
    rdr: impl std::io::Read,
    path: &Path,
) -> Result<FeatureTable> {
    let mut csv = csv::Reader::from_reader(rdr);
    let headers = csv.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = find_column(&headers, "PAT_ENC_CSN_ID", path)?;
    let value_col = headers
        .iter()
        .position(|h| h != "PAT_ENC_CSN_ID")
        .ok_or_else(|| Error::Schema(format!("{}: no feature column", path.display())))?;
    let column = headers.get(value_col).unwrap().to_string();
    let mut table = FeatureTable::new(vec![column])?;
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| Error::Schema(format!("{}: line {line}: {e}", path.display())))?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let value: f64 = record.get(value_col).unwrap_or("").parse().map_err(|_| {
            Error::Schema(format!("{}: line {line}: bad value", path.display()))
        })?;
        table.insert_row(id, vec![value])?;
    }
    Ok(table)
}

/// Writes a cluster feature table: header `csn,cluster1,…,clusterK`.
pub fn write_cluster_feature_csv(table: &FeatureTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write!(out, "csn").map_err(|e| Error::io(path, e))?;
    for c in table.columns() {
        write!(out, ",{c}").map_err(|e| Error::io(path, e))?;
    }
    writeln!(out).map_err(|e| Error::io(path, e))?;
    for (id, row) in table.iter() {
        write!(out, "{id}").map_err(|e| Error::io(path, e))?;
        for v in row {
            write!(out, ",{v}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(out).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `csn,cluster1,…,clusterK` feature file.
pub fn read_cluster_feature_csv(path: &Path) -> Result<FeatureTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cluster_feature_from_reader(BufReader::new(file), path)
}

pub fn read_cluster_feature_from_reader(
    rdr: impl std::io::Read,
    path: &Path,
) -> Result<FeatureTable> {
    let mut csv = csv::Reader::from_reader(rdr);
    let headers = csv.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = find_column(&headers, "csn", path)?;
    let mut value_cols = Vec::new();
    let mut columns = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i != id_col {
            value_cols.push(i);
            columns.push(h.to_string());
        }
    }
    let mut table = FeatureTable::new(columns)?;
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| Error::Schema(format!("{}: line {line}: {e}", path.display())))?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let mut row = Vec::with_capacity(value_cols.len());
        for &c in &value_cols {
            let v: f64 = record.get(c).unwrap_or("").parse().map_err(|_| {
                Error::Schema(format!("{}: line {line}: bad value", path.display()))
            })?;
            row.push(v);
        }
        table.insert_row(id, row)?;
    }
    Ok(table)
}
