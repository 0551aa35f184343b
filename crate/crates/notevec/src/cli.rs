//! Subcommand implementations. Each one is a thin orchestration over the
//! library modules plus the file layout conventions tying them together.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{FeatureMode, PipelineConfig, DEFAULT_SEEDS_FILE};
use crate::corpus;
use crate::embedding;
use crate::error::{Error, Result};
use crate::features::{self, FeatureExtractor, FeatureTable};
use crate::learn::{self, Evaluation};
use crate::synth;
use crate::vecops::{self, ClusterModel};

/// Cluster-mode feature files inside `features_dir`.
pub const PERCENTAGE_FEATURES_FILE: &str = "noteClustersColumns.csv";
pub const AFFINITY_FEATURES_FILE: &str = "noteClustersColumnsAffinity.csv";
/// Per-seed feature files are `<seed>_feature3_square.csv`.
pub const SEED_FEATURE_SUFFIX: &str = "_feature3_square.csv";

/// Cleans the raw corpus into the cleaned mirror. Returns lines written.
pub fn cmd_clean(cfg: &PipelineConfig, verbose: bool) -> Result<usize> {
    let written = corpus::clean_corpus_dir(&cfg.corpus_dir, &cfg.clean_dir, cfg.dedup_notes)?;
    if verbose {
        eprintln!(
            "info: cleaned {} -> {} ({written} lines)",
            cfg.corpus_dir.display(),
            cfg.clean_dir.display()
        );
    }
    Ok(written)
}

/// Builds the vocabulary and trains the embedding model from the cleaned
/// corpus, then writes it in word2vec text format.
pub fn cmd_train(cfg: &PipelineConfig, verbose: bool) -> Result<()> {
    cfg.train.validate()?;
    let reader = corpus::CorpusReader::open(&cfg.clean_dir)?;
    let vocab = embedding::build_vocab(&reader, cfg.train.min_count)?;
    if verbose {
        eprintln!(
            "info: vocabulary {} words over {} tokens",
            vocab.len(),
            vocab.total_tokens()
        );
    }
    let model = embedding::init_model(vocab, &cfg.train)?;
    let model = embedding::train(model, &reader, &cfg.train)?;
    embedding::save_model(&model, &cfg.model_path)?;
    if verbose {
        eprintln!("info: model written to {}", cfg.model_path.display());
    }
    Ok(())
}

/// Prints the query word's nearest neighbors, one `word,score` line each.
pub fn cmd_similar(cfg: &PipelineConfig, word: &str, topn: usize) -> Result<()> {
    let model = embedding::load_model(&cfg.model_path)?;
    for (w, score) in vecops::most_similar(&model, word, topn)? {
        println!("{w},{score:.6}");
    }
    Ok(())
}

/// Reads the seed list — the configured file, or the built-in list when the
/// default path is absent.
fn load_seeds(cfg: &PipelineConfig) -> Result<Vec<String>> {
    if cfg.seeds_file.exists() {
        return features::read_seed_list(&cfg.seeds_file);
    }
    if cfg.seeds_file == Path::new(DEFAULT_SEEDS_FILE) {
        eprintln!(
            "warning: {} not found; using the built-in seed list",
            cfg.seeds_file.display()
        );
        return Ok(features::parse_seed_list(features::DEFAULT_SEEDS));
    }
    Err(Error::io(
        &cfg.seeds_file,
        std::io::Error::new(std::io::ErrorKind::NotFound, "seeds file not found"),
    ))
}

/// Writes `<seed>.csv` under `bags_dir` for every in-vocabulary seed.
/// Out-of-vocabulary and repeated seeds are skipped with a warning.
pub fn cmd_bags(cfg: &PipelineConfig, verbose: bool) -> Result<()> {
    let model = embedding::load_model(&cfg.model_path)?;
    let seeds = load_seeds(cfg)?;
    std::fs::create_dir_all(&cfg.bags_dir).map_err(|e| Error::io(&cfg.bags_dir, e))?;
    let mut done: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut written = 0usize;
    for seed in seeds {
        if !done.insert(seed.clone()) {
            eprintln!("warning: duplicate seed {seed:?} skipped");
            continue;
        }
        match vecops::build_seed_bag(&model, &seed, cfg.bags_topn) {
            Ok(bag) => {
                let path = cfg.bags_dir.join(format!("{seed}.csv"));
                vecops::write_seed_bag_csv(&bag, &path)?;
                written += 1;
            }
            Err(Error::Lookup(_)) => {
                eprintln!("warning: seed {seed:?} not in vocabulary, skipped");
            }
            Err(other) => return Err(other),
        }
    }
    if verbose {
        eprintln!("info: {written} bag files in {}", cfg.bags_dir.display());
    }
    Ok(())
}

/// Clusters the word vectors; writes the clusters CSV and the sim table.
pub fn cmd_cluster(cfg: &PipelineConfig, verbose: bool) -> Result<()> {
    let model = embedding::load_model(&cfg.model_path)?;
    let (clusters, outcome) = ClusterModel::fit(&model, &cfg.cluster)?;
    vecops::write_clusters_csv(&clusters, &cfg.clusters_csv)?;
    let table = vecops::build_sim_table(&model, &clusters)?;
    vecops::write_sim_table_csv(&table, &cfg.sim_table_csv)?;
    if verbose {
        eprintln!(
            "info: k={} objective {:.4} after {} iterations",
            cfg.cluster.k, outcome.objective, outcome.iterations
        );
    }
    Ok(())
}

fn sorted_dir_entries(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(suffix))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Scores the notes file into feature CSVs for the configured mode.
pub fn cmd_score(cfg: &PipelineConfig, verbose: bool) -> Result<()> {
    let notes = corpus::load_notes(&cfg.notes_csv)?;
    let clean: Vec<corpus::CleanNote> = notes.iter().map(corpus::clean_note).collect();
    std::fs::create_dir_all(&cfg.features_dir).map_err(|e| Error::io(&cfg.features_dir, e))?;

    let build = match cfg.mode {
        FeatureMode::Bags => {
            let bag_files = sorted_dir_entries(&cfg.bags_dir, ".csv")?;
            if bag_files.is_empty() {
                return Err(Error::Param(format!(
                    "no bag files in {}",
                    cfg.bags_dir.display()
                )));
            }
            let mut bags = Vec::with_capacity(bag_files.len());
            for path in &bag_files {
                let seed = vecops::seed_from_path(path)?;
                bags.push(vecops::read_seed_bag_csv(path, &seed)?);
            }
            let build =
                features::build_feature_table(&clean, &FeatureExtractor::Bags(&bags), cfg.strict_compat)?;
            for bag in &bags {
                let path = cfg
                    .features_dir
                    .join(format!("{}{SEED_FEATURE_SUFFIX}", bag.seed));
                features::write_seed_feature_csv(&build.table, &bag.seed, &path)?;
            }
            build
        }
        FeatureMode::Percentage => {
            let map = vecops::read_clusters_csv(&cfg.clusters_csv)?;
            let build = features::build_feature_table(
                &clean,
                &FeatureExtractor::ClusterPercentage(&map),
                cfg.strict_compat,
            )?;
            features::write_cluster_feature_csv(
                &build.table,
                &cfg.features_dir.join(PERCENTAGE_FEATURES_FILE),
            )?;
            build
        }
        FeatureMode::Affinity => {
            let sims = vecops::read_sim_table_csv(&cfg.sim_table_csv)?;
            let build = features::build_feature_table(
                &clean,
                &FeatureExtractor::ClusterAffinity(&sims),
                cfg.strict_compat,
            )?;
            features::write_cluster_feature_csv(
                &build.table,
                &cfg.features_dir.join(AFFINITY_FEATURES_FILE),
            )?;
            build
        }
    };

    for id in &build.dropped_encounters {
        eprintln!("warning: encounter {id} dropped: no usable tokens");
    }
    if verbose {
        eprintln!(
            "info: {} encounters scored in {} mode",
            build.table.len(),
            cfg.mode.as_str()
        );
    }
    Ok(())
}

/// Every feature set found on disk, evaluated: merge with labels, split by
/// date, boost, AUC. Includes the baseline when any LACE value is present.
pub fn cmd_evaluate(cfg: &PipelineConfig, verbose: bool) -> Result<Vec<(String, Evaluation)>> {
    let labels = learn::load_labels(&cfg.labels_csv)?;
    let mut results: Vec<(String, Evaluation)> = Vec::new();

    let bag_files = if cfg.features_dir.is_dir() {
        sorted_dir_entries(&cfg.features_dir, SEED_FEATURE_SUFFIX)?
    } else {
        Vec::new()
    };
    if !bag_files.is_empty() {
        let mut tables = Vec::with_capacity(bag_files.len());
        for path in &bag_files {
            tables.push(features::read_seed_feature_csv(path)?);
        }
        let merged = FeatureTable::merge(&tables)?;
        let eval = learn::evaluate_feature_table(&merged, &labels, cfg.cutoff_date, cfg.rounds)?;
        results.push(("bags".to_string(), eval));
    }

    let pct_path = cfg.features_dir.join(PERCENTAGE_FEATURES_FILE);
    if pct_path.is_file() {
        let table = features::read_cluster_feature_csv(&pct_path)?;
        let eval = learn::evaluate_feature_table(&table, &labels, cfg.cutoff_date, cfg.rounds)?;
        results.push(("percentage".to_string(), eval));
    }

    let aff_path = cfg.features_dir.join(AFFINITY_FEATURES_FILE);
    if aff_path.is_file() {
        let table = features::read_cluster_feature_csv(&aff_path)?;
        let eval = learn::evaluate_feature_table(&table, &labels, cfg.cutoff_date, cfg.rounds)?;
        results.push(("affinity".to_string(), eval));
    }

    if labels.iter().any(|r| r.lace.is_some()) {
        let eval = learn::evaluate_baseline(&labels, cfg.cutoff_date, cfg.rounds)?;
        results.push(("baseline_lace".to_string(), eval));
    }

    if results.is_empty() {
        return Err(Error::Param(format!(
            "no feature files under {} and no baseline column",
            cfg.features_dir.display()
        )));
    }

    let file = File::create(&cfg.report_path).map_err(|e| Error::io(&cfg.report_path, e))?;
    let mut report = BufWriter::new(file);
    for (name, eval) in &results {
        let line = format!(
            "{name} AUC {:.4} (positives={}, negatives={}, train={}, test={})",
            eval.auc.auc, eval.auc.positives, eval.auc.negatives, eval.train_rows, eval.test_rows
        );
        println!("{line}");
        writeln!(report, "{line}").map_err(|e| Error::io(&cfg.report_path, e))?;
        if verbose && eval.dropped_incomplete > 0 {
            eprintln!(
                "info: {name}: {} incomplete training rows dropped",
                eval.dropped_incomplete
            );
        }
    }
    report.flush().map_err(|e| Error::io(&cfg.report_path, e))?;
    Ok(results)
}

/// Generates the synthetic corpus, notes, labels, and seed list.
pub fn cmd_synth(cfg: &PipelineConfig, verbose: bool) -> Result<()> {
    let spec = cfg.synth_topic_spec();
    let ds = synth::gen_labeled_encounters(
        &spec,
        cfg.synth.encounters,
        cfg.synth.cutoff_fraction,
        cfg.synth.beta,
        cfg.cutoff_date,
    )?;
    synth::write_corpus_dir(&ds.corpus, &cfg.corpus_dir, cfg.synth.shards)?;
    synth::write_notes_csv(&ds.encounters, &cfg.notes_csv)?;
    synth::write_labels_csv(&ds.encounters, &cfg.labels_csv)?;
    synth::write_seed_file(&ds.corpus, cfg.synth.seeds_per_topic, &cfg.seeds_file)?;
    if verbose {
        let positives = ds.encounters.iter().filter(|e| e.label == 1).count();
        eprintln!(
            "info: {} encounters ({positives} positive), {} corpus sentences, base share {:.3}",
            ds.encounters.len(),
            ds.corpus.sentences.len(),
            ds.base_share
        );
    }
    Ok(())
}
