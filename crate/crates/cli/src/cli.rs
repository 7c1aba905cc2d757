//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stackdetect_core::synth::SynthProfile;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{write_synth, Pipeline, Stage};

#[derive(Debug, Parser)]
#[command(name = "stackdetect", version, about = "Stacked ensembles for detecting machine-generated text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a labeled synthetic corpus (2:1 human:LLM) as JSONL.
    Synth {
        /// Output JSONL file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3000)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `default` or `ood`.
        #[arg(long, default_value = "default")]
        profile: String,
    },
    /// Length, topic and part-of-speech profiles of the corpora.
    Analyze(StageArgs),
    /// Split the corpus and train the native base classifiers.
    TrainBase(StageArgs),
    /// Score every split and test set with every base classifier.
    ImportScores(StageArgs),
    /// Build the voting ensemble and train the meta-learners.
    TrainEnsemble(StageArgs),
    /// Per-method, per-dataset metrics.
    Evaluate(StageArgs),
    /// Render the comparison tables.
    Report(StageArgs),
    /// Every stage in order (synthesis first when configured).
    Run(StageArgs),
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl StageArgs {
    pub fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = std::path::absolute(out)
                .map_err(|e| CliError::invalid(format!("bad --out {}: {e}", out.display())))?;
        }
        Ok(cfg)
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let (args, stage) = match cli.command {
        Command::Synth { out, size, seed, profile } => {
            let profile = SynthProfile::parse(&profile)
                .ok_or_else(|| CliError::invalid(format!("unknown profile `{profile}` (expected default or ood)")))?;
            if size < 10 {
                return Err(CliError::invalid(format!("--size must be at least 10, got {size}")));
            }
            write_synth(&out, size, seed, profile)?;
            println!("synth: wrote {} ({size} documents, profile {profile})", out.display());
            return Ok(());
        }
        Command::Analyze(a) => (a, Some(Stage::Analyze)),
        Command::TrainBase(a) => (a, Some(Stage::TrainBase)),
        Command::ImportScores(a) => (a, Some(Stage::ImportScores)),
        Command::TrainEnsemble(a) => (a, Some(Stage::TrainEnsemble)),
        Command::Evaluate(a) => (a, Some(Stage::Evaluate)),
        Command::Report(a) => (a, Some(Stage::Report)),
        Command::Run(a) => (a, None),
    };
    let cfg = args.load()?;
    let pipeline = Pipeline::new(cfg)?;
    match stage {
        Some(s) => {
            pipeline.config.validate(matches!(s, Stage::Analyze | Stage::TrainBase | Stage::ImportScores | Stage::Evaluate))?;
            pipeline.run_stage(s)
        }
        None => {
            pipeline.config.validate(true)?;
            pipeline.run_all()
        }
    }
}

/// Parse, run and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(cli);
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
