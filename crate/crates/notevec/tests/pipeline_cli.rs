//! End-to-end checks of the `notevec` binary: subcommand composition over a
//! config file, error prefixes and exit codes, output formats, idempotence.

use std::path::Path;
use std::process::{Command, Output};

fn notevec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_notevec"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("pipeline.conf");
    let text = format!(
        "# desk-scale pipeline\n\
         corpus_dir = {0}/corpus\n\
         clean_dir = {0}/clean\n\
         notes_csv = {0}/notes.csv\n\
         labels_csv = {0}/labels.csv\n\
         model_path = {0}/model.txt\n\
         seeds_file = {0}/seeds.txt\n\
         bags_dir = {0}/bags\n\
         clusters_csv = {0}/wordclusters.csv\n\
         sim_table_csv = {0}/wordClusterSimilarity.csv\n\
         features_dir = {0}/features\n\
         report_path = {0}/auc_report.txt\n\
         mode = bags\n\
         bags.topn = 10\n\
         train.dim = 8\n\
         train.window = 4\n\
         train.min_count = 5\n\
         train.negatives = 3\n\
         train.epochs = 3\n\
         train.seed = 9\n\
         cluster.k = 3\n\
         cluster.seed = 9\n\
         model.rounds = 20\n\
         synth.sentences = 400\n\
         synth.encounters = 40\n\
         synth.min_word_count = 5\n\
         synth.seed = 9\n\
         synth.seeds_per_topic = 3\n\
         synth.beta = 8\n",
        dir.display()
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn full_pipeline_composes_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let cfg = cfg.to_str().unwrap();

    for step in ["synth", "clean", "train", "bags", "cluster"] {
        let out = notevec(&[step, "--config", cfg], dir.path());
        assert!(
            out.status.success(),
            "{step} failed: {}",
            stderr_of(&out)
        );
    }
    // score all three feature modes into the same features dir
    for mode in ["bags", "percentage", "affinity"] {
        let out = notevec(&["score", "--config", cfg, "--mode", mode], dir.path());
        assert!(out.status.success(), "score {mode}: {}", stderr_of(&out));
    }
    let out = notevec(&["evaluate", "--config", cfg], dir.path());
    assert!(out.status.success(), "evaluate: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    for set in ["bags", "percentage", "affinity", "baseline_lace"] {
        assert!(stdout.contains(&format!("{set} AUC ")), "missing {set} in:\n{stdout}");
    }
    let report = std::fs::read_to_string(dir.path().join("auc_report.txt")).unwrap();
    assert_eq!(report.trim(), stdout.trim());

    // feature files exist with the documented names
    assert!(dir.path().join("features/noteClustersColumns.csv").is_file());
    assert!(dir
        .path()
        .join("features/noteClustersColumnsAffinity.csv")
        .is_file());
    let bag_features = std::fs::read_dir(dir.path().join("features"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with("_feature3_square.csv")
        })
        .count();
    assert_eq!(bag_features, 6); // 3 seeds per topic x 2 topics
}

#[test]
fn similar_prints_word_score_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let cfg = cfg_path.to_str().unwrap();
    for step in ["synth", "clean", "train"] {
        assert!(notevec(&[step, "--config", cfg], dir.path()).status.success());
    }
    // pick a seed word we know is in vocabulary
    let seeds = std::fs::read_to_string(dir.path().join("seeds.txt")).unwrap();
    let word = seeds.lines().next().unwrap();

    let out = notevec(&["similar", word, "3", "--config", cfg], dir.path());
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let (w, score) = line.split_once(',').expect("word,score");
        assert!(w.chars().all(|c| c.is_ascii_lowercase()));
        // six decimals
        let frac = score.rsplit('.').next().unwrap();
        assert_eq!(frac.len(), 6, "score {score} not to 6 decimals");
        score.parse::<f64>().unwrap();
    }

    // out-of-vocabulary word: exit code 2, lookup category
    let out = notevec(&["similar", "zzzznotaword", "--config", cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).starts_with("error:lookup:"), "{}", stderr_of(&out));
}

#[test]
fn oov_seeds_are_skipped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let cfg = cfg_path.to_str().unwrap();
    for step in ["synth", "clean", "train"] {
        assert!(notevec(&[step, "--config", cfg], dir.path()).status.success());
    }
    // append a word that cannot be in the vocabulary
    let seeds_path = dir.path().join("seeds.txt");
    let mut seeds = std::fs::read_to_string(&seeds_path).unwrap();
    seeds.push_str("zzzznotaword\n");
    std::fs::write(&seeds_path, seeds).unwrap();

    let out = notevec(&["bags", "--config", cfg], dir.path());
    assert!(out.status.success());
    let stderr = stderr_of(&out);
    assert!(
        stderr.contains("warning") && stderr.contains("zzzznotaword"),
        "expected OOV warning, got: {stderr}"
    );
    assert!(!dir.path().join("bags/zzzznotaword.csv").exists());
}

#[test]
fn error_lines_are_machine_parseable() {
    let dir = tempfile::tempdir().unwrap();

    // io: cleaning a corpus dir that does not exist
    let out = notevec(
        &["clean", "--corpus_dir", "no/such/dir", "--clean_dir", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error:io:"), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("no/such/dir"));

    // config: unknown key in the config file
    std::fs::write(dir.path().join("bad.conf"), "no_such_key = 5\n").unwrap();
    let out = notevec(&["clean", "--config", "bad.conf"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error:config:"), "{}", stderr_of(&out));

    // param: cluster.k larger than the vocabulary
    let cfg_path = write_config(dir.path());
    let cfg = cfg_path.to_str().unwrap();
    for step in ["synth", "clean", "train"] {
        assert!(notevec(&[step, "--config", cfg], dir.path()).status.success());
    }
    let out = notevec(
        &["cluster", "--config", cfg, "--cluster.k", "100000"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error:param:"), "{}", stderr_of(&out));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let cfg = cfg_path.to_str().unwrap();

    assert!(notevec(&["synth", "--config", cfg], dir.path()).status.success());
    let notes_first = std::fs::read(dir.path().join("notes.csv")).unwrap();
    let labels_first = std::fs::read(dir.path().join("labels.csv")).unwrap();
    assert!(notevec(&["synth", "--config", cfg], dir.path()).status.success());
    assert_eq!(notes_first, std::fs::read(dir.path().join("notes.csv")).unwrap());
    assert_eq!(labels_first, std::fs::read(dir.path().join("labels.csv")).unwrap());

    assert!(notevec(&["clean", "--config", cfg], dir.path()).status.success());
    assert!(notevec(&["train", "--config", cfg], dir.path()).status.success());
    let model_first = std::fs::read(dir.path().join("model.txt")).unwrap();
    assert!(notevec(&["train", "--config", cfg], dir.path()).status.success());
    assert_eq!(model_first, std::fs::read(dir.path().join("model.txt")).unwrap());

    // master seed flag changes the result, deterministically
    assert!(notevec(&["train", "--config", cfg, "--seed", "123"], dir.path())
        .status
        .success());
    let reseeded = std::fs::read(dir.path().join("model.txt")).unwrap();
    assert_ne!(model_first, reseeded);
    assert!(notevec(&["train", "--config", cfg, "--seed", "123"], dir.path())
        .status
        .success());
    assert_eq!(reseeded, std::fs::read(dir.path().join("model.txt")).unwrap());
}
