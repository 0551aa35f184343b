use std::path::Path;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use notevec::cli;
use notevec::config::{PipelineConfig, CONFIG_KEYS};
use notevec::error::{Error, Result};

fn build_command() -> Command {
    let mut cmd = Command::new("notevec")
        .about("Turns free-text notes into quantitative model features via word embeddings")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .help("Pipeline config file (key = value lines)"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("INT")
                .global(true)
                .help("Master seed: pins train.seed, cluster.seed, and synth.seed"),
        )
        .arg(
            Arg::new("workers")
                .long("workers")
                .value_name("INT")
                .global(true)
                .help("Shorthand for train.workers"),
        )
        .arg(
            Arg::new("verbose")
                .long("verbose")
                .action(ArgAction::SetTrue)
                .global(true)
                .help("Extra progress lines on stderr"),
        );
    // every config key doubles as a flag override of the same name
    for key in CONFIG_KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .global(true)
                .hide(true),
        );
    }
    cmd.subcommand(Command::new("clean").about("Clean the raw corpus into the cleaned mirror"))
        .subcommand(Command::new("train").about("Build the vocabulary and train word embeddings"))
        .subcommand(
            Command::new("similar")
                .about("Print the words closest to a query word")
                .arg(Arg::new("word").required(true))
                .arg(Arg::new("topn").value_name("N").default_value("20")),
        )
        .subcommand(Command::new("bags").about("Write one top-N neighbor bag per seed word"))
        .subcommand(Command::new("cluster").about("Cluster word vectors, write assignments and similarities"))
        .subcommand(Command::new("score").about("Score the notes file into feature CSVs"))
        .subcommand(Command::new("evaluate").about("Train the boosted model and report AUC per feature set"))
        .subcommand(Command::new("synth").about("Generate a synthetic corpus, notes, labels, and seeds"))
}

fn run() -> Result<()> {
    let matches = build_command().get_matches();

    let mut cfg = match matches.get_one::<String>("config") {
        Some(path) => PipelineConfig::from_file(Path::new(path))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = matches.get_one::<String>("seed") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Config(format!("bad value for --seed: {seed:?}")))?;
        cfg.set_master_seed(seed);
    }
    if let Some(workers) = matches.get_one::<String>("workers") {
        cfg.set("train.workers", workers)?;
    }
    for key in CONFIG_KEYS {
        if let Some(value) = matches.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    let verbose = matches.get_flag("verbose");

    match matches.subcommand() {
        Some(("clean", _)) => {
            cli::cmd_clean(&cfg, verbose)?;
        }
        Some(("train", _)) => cli::cmd_train(&cfg, verbose)?,
        Some(("similar", sub)) => {
            let word = sub.get_one::<String>("word").expect("required");
            let topn_raw = sub.get_one::<String>("topn").expect("defaulted");
            let topn: usize = topn_raw
                .parse()
                .map_err(|_| Error::Param(format!("bad topn {topn_raw:?}")))?;
            cli::cmd_similar(&cfg, word, topn)?;
        }
        Some(("bags", _)) => cli::cmd_bags(&cfg, verbose)?,
        Some(("cluster", _)) => cli::cmd_cluster(&cfg, verbose)?,
        Some(("score", _)) => cli::cmd_score(&cfg, verbose)?,
        Some(("evaluate", _)) => {
            cli::cmd_evaluate(&cfg, verbose)?;
        }
        Some(("synth", _)) => cli::cmd_synth(&cfg, verbose)?,
        _ => unreachable!("subcommand required"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error:{}:{}", e.category(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
