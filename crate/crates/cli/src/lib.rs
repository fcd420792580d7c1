//! Command-line pipeline: synthetic corpus generation, preprocessing,
//! training, synthesis and evaluation.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod preprocess;
pub mod synthesize;
pub mod synthetic;
pub mod train;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cospeech", version, about = "Co-speech face and gesture synthesis")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory (for gen-synthetic, the corpus directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a procedural corpus.
    GenSynthetic,
    /// Normalize, resample and index the corpus into the run directory.
    Preprocess {
        /// Raw corpus directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the generator and discriminator.
    Train {
        /// Continue from checkpoints/latest.json.
        #[arg(long)]
        resume: bool,
    },
    /// Train the audio-to-lip predictor.
    TrainPhoneme,
    /// Synthesize an animation for an audio file.
    Synthesize {
        /// WAV file.
        #[arg(long)]
        audio: PathBuf,
        /// Transcript TSV: one word per line, optionally with start and end frames.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Speaker name or index.
        #[arg(long)]
        speaker: String,
        /// Clip directory providing the seed frames.
        #[arg(long)]
        seed_clip: PathBuf,
        /// Sample the speaker code instead of using its mean.
        #[arg(long)]
        sample_noise: bool,
    },
    /// Score the best checkpoint on a split and write report.json/report.csv.
    Evaluate {
        #[arg(long, default_value = "test")]
        split: String,
        /// Score the ground truth against itself.
        #[arg(long)]
        ground_truth: bool,
    },
}

pub fn resolve_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = resolve_config(&cli.common)?;
    match cli.command {
        Command::GenSynthetic => {
            if let Some(o) = cli.common.out {
                cfg.corpus = o;
            }
            cfg.validate()?;
            let m = synthetic::write_corpus(&cfg.corpus, &cfg.synthetic, &cfg.split, cfg.seed)?;
            log::info!(
                "{} train, {} val, {} test clips",
                m.train.len(),
                m.val.len(),
                m.test.len()
            );
        }
        cmd => {
            if let Some(o) = cli.common.out {
                cfg.out = o;
            }
            match cmd {
                Command::GenSynthetic => unreachable!(),
                Command::Preprocess { corpus } => {
                    if let Some(c) = corpus {
                        cfg.corpus = c;
                    }
                    let s = preprocess::cmd_preprocess(&cfg)?;
                    log::info!(
                        "{} train, {} val, {} test windows; {} clips skipped",
                        s.windows.train,
                        s.windows.val,
                        s.windows.test,
                        s.skipped.len()
                    );
                }
                Command::Train { resume } => {
                    let o = train::cmd_train(&cfg, resume)?;
                    log::info!("trained to epoch {}, best {}", o.epochs, o.best_epoch);
                }
                Command::TrainPhoneme => {
                    let c = train::cmd_train_phoneme(&cfg)?;
                    log::info!("phoneme predictor best epoch {}", c.epoch);
                }
                Command::Synthesize {
                    audio,
                    transcript,
                    speaker,
                    seed_clip,
                    sample_noise,
                } => {
                    let req = synthesize::SynthesisRequest {
                        audio,
                        transcript,
                        speaker,
                        seed_clip,
                        sample_noise,
                    };
                    let p = synthesize::cmd_synthesize(&cfg, &req)?;
                    println!("{}", p.display());
                }
                Command::Evaluate { split, ground_truth } => {
                    let (r, _) = evaluate::cmd_evaluate(&cfg, &split, ground_truth)?;
                    print!("{}", r.to_csv());
                }
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
