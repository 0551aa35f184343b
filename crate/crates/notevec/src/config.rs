//! The pipeline config: a flat key-value text file with dotted section
//! prefixes (`train.dim = 500`). Every key also exists as a CLI flag of the
//! same name, so one file plus overrides captures a whole run.

use std::path::PathBuf;

use chrono::NaiveDate;

use crate::embedding::TrainConfig;
use crate::error::{Error, Result};
use crate::vecops::KmeansParams;

/// Which feature scheme `score` (and `evaluate`) works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Bags,
    Percentage,
    Affinity,
}

impl FeatureMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bags" => Ok(FeatureMode::Bags),
            "percentage" => Ok(FeatureMode::Percentage),
            "affinity" => Ok(FeatureMode::Affinity),
            other => Err(Error::Config(format!(
                "mode must be bags|percentage|affinity, got {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureMode::Bags => "bags",
            FeatureMode::Percentage => "percentage",
            FeatureMode::Affinity => "affinity",
        }
    }
}

/// Synthetic-data knobs (the `synth.*` section).
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub topics: usize,
    pub words_per_topic: usize,
    pub shared_words: usize,
    pub sentence_min: usize,
    pub sentence_max: usize,
    pub purity: f64,
    pub sentences: usize,
    pub min_word_count: u64,
    pub seed: u64,
    pub encounters: usize,
    pub cutoff_fraction: f64,
    pub beta: f64,
    pub seeds_per_topic: usize,
    pub shards: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 2,
            words_per_topic: 12,
            shared_words: 8,
            sentence_min: 4,
            sentence_max: 9,
            purity: 0.8,
            sentences: 1200,
            min_word_count: 5,
            seed: 42,
            encounters: 200,
            cutoff_fraction: 0.8,
            beta: 10.0,
            seeds_per_topic: 5,
            shards: 4,
        }
    }
}

/// Everything a pipeline run needs, collected from defaults, the config
/// file, and flag overrides (in that order).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub clean_dir: PathBuf,
    pub notes_csv: PathBuf,
    pub labels_csv: PathBuf,
    pub model_path: PathBuf,
    pub seeds_file: PathBuf,
    pub bags_dir: PathBuf,
    pub clusters_csv: PathBuf,
    pub sim_table_csv: PathBuf,
    pub features_dir: PathBuf,
    pub report_path: PathBuf,
    pub mode: FeatureMode,
    pub strict_compat: bool,
    pub dedup_notes: bool,
    pub bags_topn: usize,
    pub train: TrainConfig,
    pub cluster: KmeansParams,
    pub rounds: usize,
    pub cutoff_date: NaiveDate,
    pub synth: SynthConfig,
}

/// Default name of the seeds file; when it is absent at `bags` time the
/// built-in seed list is used instead.
pub const DEFAULT_SEEDS_FILE: &str = "seeds.txt";

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_dir: "corpus".into(),
            clean_dir: "clean".into(),
            notes_csv: "notes.csv".into(),
            labels_csv: "labels.csv".into(),
            model_path: "model.txt".into(),
            seeds_file: DEFAULT_SEEDS_FILE.into(),
            bags_dir: "bags".into(),
            clusters_csv: "wordclusters.csv".into(),
            sim_table_csv: "wordClusterSimilarity.csv".into(),
            features_dir: "features".into(),
            report_path: "auc_report.txt".into(),
            mode: FeatureMode::Bags,
            strict_compat: false,
            dedup_notes: false,
            bags_topn: 200,
            train: TrainConfig::default(),
            cluster: KmeansParams::default(),
            rounds: 100,
            cutoff_date: crate::learn::default_cutoff(),
            synth: SynthConfig::default(),
        }
    }
}

/// Every config key, exactly as it appears in the file and as a CLI flag.
pub const CONFIG_KEYS: &[&str] = &[
    "corpus_dir",
    "clean_dir",
    "notes_csv",
    "labels_csv",
    "model_path",
    "seeds_file",
    "bags_dir",
    "clusters_csv",
    "sim_table_csv",
    "features_dir",
    "report_path",
    "mode",
    "strict_compat",
    "dedup_notes",
    "bags.topn",
    "train.dim",
    "train.window",
    "train.min_count",
    "train.negatives",
    "train.epochs",
    "train.lr",
    "train.seed",
    "train.workers",
    "train.subsample",
    "cluster.k",
    "cluster.max_iter",
    "cluster.tol",
    "cluster.seed",
    "model.rounds",
    "model.cutoff_date",
    "synth.topics",
    "synth.words_per_topic",
    "synth.shared_words",
    "synth.sentence_min",
    "synth.sentence_max",
    "synth.purity",
    "synth.sentences",
    "synth.min_word_count",
    "synth.seed",
    "synth.encounters",
    "synth.cutoff_fraction",
    "synth.beta",
    "synth.seeds_per_topic",
    "synth.shards",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "bad value for {key}: {other:?} (expected true/false)"
        ))),
    }
}

impl PipelineConfig {
    /// Applies one `key = value` pair. Unknown keys are configuration errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "corpus_dir" => self.corpus_dir = v.into(),
            "clean_dir" => self.clean_dir = v.into(),
            "notes_csv" => self.notes_csv = v.into(),
            "labels_csv" => self.labels_csv = v.into(),
            "model_path" => self.model_path = v.into(),
            "seeds_file" => self.seeds_file = v.into(),
            "bags_dir" => self.bags_dir = v.into(),
            "clusters_csv" => self.clusters_csv = v.into(),
            "sim_table_csv" => self.sim_table_csv = v.into(),
            "features_dir" => self.features_dir = v.into(),
            "report_path" => self.report_path = v.into(),
            "mode" => self.mode = FeatureMode::parse(v)?,
            "strict_compat" => self.strict_compat = parse_bool(key, v)?,
            "dedup_notes" => self.dedup_notes = parse_bool(key, v)?,
            "bags.topn" => self.bags_topn = parse_num(key, v)?,
            "train.dim" => self.train.dim = parse_num(key, v)?,
            "train.window" => self.train.window = parse_num(key, v)?,
            "train.min_count" => self.train.min_count = parse_num(key, v)?,
            "train.negatives" => self.train.negatives = parse_num(key, v)?,
            "train.epochs" => self.train.epochs = parse_num(key, v)?,
            "train.lr" => self.train.initial_lr = parse_num(key, v)?,
            "train.seed" => self.train.rng_seed = parse_num(key, v)?,
            "train.workers" => self.train.workers = parse_num(key, v)?,
            "train.subsample" => self.train.subsample_threshold = parse_num(key, v)?,
            "cluster.k" => self.cluster.k = parse_num(key, v)?,
            "cluster.max_iter" => self.cluster.max_iter = parse_num(key, v)?,
            "cluster.tol" => self.cluster.tol = parse_num(key, v)?,
            "cluster.seed" => self.cluster.rng_seed = parse_num(key, v)?,
            "model.rounds" => self.rounds = parse_num(key, v)?,
            "model.cutoff_date" => {
                self.cutoff_date = NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| {
                    Error::Config(format!(
                        "bad value for model.cutoff_date: {v:?} (expected YYYY-MM-DD)"
                    ))
                })?;
            }
            "synth.topics" => self.synth.topics = parse_num(key, v)?,
            "synth.words_per_topic" => self.synth.words_per_topic = parse_num(key, v)?,
            "synth.shared_words" => self.synth.shared_words = parse_num(key, v)?,
            "synth.sentence_min" => self.synth.sentence_min = parse_num(key, v)?,
            "synth.sentence_max" => self.synth.sentence_max = parse_num(key, v)?,
            "synth.purity" => self.synth.purity = parse_num(key, v)?,
            "synth.sentences" => self.synth.sentences = parse_num(key, v)?,
            "synth.min_word_count" => self.synth.min_word_count = parse_num(key, v)?,
            "synth.seed" => self.synth.seed = parse_num(key, v)?,
            "synth.encounters" => self.synth.encounters = parse_num(key, v)?,
            "synth.cutoff_fraction" => self.synth.cutoff_fraction = parse_num(key, v)?,
            "synth.beta" => self.synth.beta = parse_num(key, v)?,
            "synth.seeds_per_topic" => self.synth.seeds_per_topic = parse_num(key, v)?,
            "synth.shards" => self.synth.shards = parse_num(key, v)?,
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Parses config text over `self`. Blank lines and `#` comment lines are
    /// skipped; everything else must be `key = value`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Master seed override: one flag pins every stochastic stage.
    pub fn set_master_seed(&mut self, seed: u64) {
        self.train.rng_seed = seed;
        self.cluster.rng_seed = seed;
        self.synth.seed = seed;
    }

    pub fn synth_topic_spec(&self) -> crate::synth::TopicSpec {
        crate::synth::TopicSpec {
            n_topics: self.synth.topics,
            words_per_topic: self.synth.words_per_topic,
            shared_words: self.synth.shared_words,
            sentence_len: (self.synth.sentence_min, self.synth.sentence_max),
            topic_purity: self.synth.purity,
            n_sentences: self.synth.sentences,
            min_word_count: self.synth.min_word_count,
            rng_seed: self.synth.seed,
        }
    }
}
