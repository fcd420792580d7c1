use std::fmt::Write as _;
use std::path::Path;

use cospeech::audio::{FeatureConfig, MfccConfig};
use cospeech::motion::ReferenceFace;
use cospeech::net::NetworkSpec;
use cospeech::train::{
    train_phoneme, PhonemeModel, PhonemeSample, StepLosses, SynthesisModel, TrainSample, Trainer, TrainerState,
    Validation,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{read_json, write_json};
use crate::error::{CliError, CliResult};
use crate::preprocess::ProcessedCorpus;

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const LATEST: &str = "latest.json";
pub const BEST: &str = "best.json";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const LOG_HEADER: &str =
    "epoch,reconstruction,csd,adversarial,discriminator,total,generator_lr,discriminator_lr,val_male,val_maje";
pub const PHONEME_DIR: &str = "phoneme";
pub const PHONEME_LOG: &str = "phoneme_log.csv";

/// Resumable training state written every `checkpoint_every` epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub trainer: TrainerState,
    pub best_score: f64,
    pub best_epoch: usize,
}

/// Lowest MALE + MAJE on the validation split so far, with what synthesis needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestCheckpoint {
    pub epoch: usize,
    pub validation: Validation,
    pub frame_rate: f64,
    pub speakers: Vec<String>,
    pub references: Vec<ReferenceFace>,
    pub model: SynthesisModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeCheckpoint {
    pub epoch: usize,
    pub validation_loss: Option<f64>,
    pub model: PhonemeModel,
}

pub fn mfcc_config() -> MfccConfig {
    MfccConfig::default()
}

pub fn spectrogram_config() -> FeatureConfig {
    FeatureConfig::spectrogram_default()
}

pub fn build_spec(cfg: &RunConfig, corpus: &ProcessedCorpus) -> CliResult<NetworkSpec> {
    Ok(NetworkSpec::new(
        cfg.plan,
        cfg.arch.clone(),
        corpus.face_layout()?,
        corpus.pose_layout()?,
        &corpus.template(),
        corpus.index.speakers.len(),
        mfcc_config().width(),
        spectrogram_config().mel_bands,
        corpus.vocabulary(cfg.arch.hash_buckets)?,
    )?)
}

pub fn train_samples(corpus: &ProcessedCorpus, split: &str, spec: &NetworkSpec) -> CliResult<Vec<TrainSample>> {
    let mfcc = mfcc_config();
    corpus
        .windows(split)?
        .iter()
        .map(|w| {
            Ok(TrainSample::from_window(
                w,
                &corpus.index.references[w.speaker],
                spec,
                &mfcc,
            )?)
        })
        .collect()
}

pub fn phoneme_samples(corpus: &ProcessedCorpus, split: &str, spec: &NetworkSpec) -> CliResult<Vec<PhonemeSample>> {
    let cfg = spectrogram_config();
    corpus
        .windows(split)?
        .iter()
        .map(|w| Ok(PhonemeSample::from_window(w, spec, &cfg)?))
        .collect()
}

fn log_row(epoch: usize, l: &StepLosses, g_lr: f64, d_lr: f64, v: &Validation) -> String {
    format!(
        "{epoch},{},{},{},{},{},{g_lr},{d_lr},{},{}\n",
        l.reconstruction, l.csd, l.adversarial, l.discriminator, l.total, v.male, v.maje
    )
}

/// Keeps the header and the rows of the first `epochs` epochs.
fn truncate_log(path: &Path, epochs: usize) -> CliResult<String> {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    let mut out = format!("{LOG_HEADER}\n");
    for line in text.lines().skip(1) {
        let e: usize = line
            .split(',')
            .next()
            .and_then(|v| v.parse().ok())
            .unwrap_or(usize::MAX);
        if e <= epochs {
            out.push_str(line);
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub start_epoch: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    /// Validation before the first epoch of this invocation.
    pub initial: Validation,
    pub last: Validation,
}

/// Adversarial training with a log row per epoch. With `resume`, continues
/// from `checkpoints/latest.json` and drops log rows past it.
pub fn cmd_train(cfg: &RunConfig, resume: bool) -> CliResult<TrainOutcome> {
    cfg.validate()?;
    let corpus = ProcessedCorpus::open(&cfg.out)?;
    let spec = build_spec(cfg, &corpus)?;
    let train = train_samples(&corpus, "train", &spec)?;
    if train.is_empty() {
        return Err(cospeech::Error::EmptySplit("train".into()).into());
    }
    let val = train_samples(&corpus, "val", &spec)?;
    let val = if val.is_empty() { train.clone() } else { val };

    let dir = cfg.out.join(CHECKPOINT_DIR);
    let log_path = cfg.out.join(TRAIN_LOG);
    let latest = dir.join(LATEST);
    let (mut trainer, mut best_score, mut best_epoch, mut log) = if resume && latest.is_file() {
        let state: RunState = read_json(&latest)?;
        state.trainer.model.spec.check_matches(&spec)?;
        let t = Trainer::from_state(state.trainer)?;
        let log = truncate_log(&log_path, t.epoch)?;
        (t, state.best_score, state.best_epoch, log)
    } else {
        if dir.exists() {
            std::fs::remove_dir_all(&dir)?;
        }
        let model = SynthesisModel::new(spec, &train, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let t = Trainer::new(model, cfg.loss.clone(), cfg.optim.clone(), cfg.seed)?;
        (t, f64::INFINITY, 0, format!("{LOG_HEADER}\n"))
    };
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&log_path, &log)?;

    let start_epoch = trainer.epoch;
    let initial = trainer.validate(&val)?;
    let mut last = initial;
    while trainer.epoch < cfg.optim.epochs {
        let (g_lr, d_lr) = (trainer.generator_lr, trainer.discriminator_lr);
        let next = trainer.epoch + 1;
        let losses = trainer
            .run_epoch(&train)
            .map_err(|e| CliError::Context(format!("epoch {next}"), e))?;
        let epoch = trainer.epoch;
        last = trainer.validate(&val)?;
        let _ = write!(log, "{}", log_row(epoch, &losses, g_lr, d_lr, &last));
        std::fs::write(&log_path, &log)?;
        let score = last.male + last.maje;
        if score < best_score {
            best_score = score;
            best_epoch = epoch;
            write_json(
                &dir.join(BEST),
                &BestCheckpoint {
                    epoch,
                    validation: last,
                    frame_rate: corpus.index.frame_rate,
                    speakers: corpus.index.speakers.clone(),
                    references: corpus.index.references.clone(),
                    model: trainer.model.clone(),
                },
            )?;
        }
        if epoch % cfg.checkpoint_every == 0 || epoch == cfg.optim.epochs {
            write_json(
                &latest,
                &RunState {
                    trainer: trainer.state(),
                    best_score,
                    best_epoch,
                },
            )?;
        }
        log::info!(
            "epoch {epoch}: total {} male {} maje {}",
            losses.total,
            last.male,
            last.maje
        );
    }
    if !dir.join(BEST).is_file() {
        write_json(
            &dir.join(BEST),
            &BestCheckpoint {
                epoch: trainer.epoch,
                validation: last,
                frame_rate: corpus.index.frame_rate,
                speakers: corpus.index.speakers.clone(),
                references: corpus.index.references.clone(),
                model: trainer.model.clone(),
            },
        )?;
    }
    Ok(TrainOutcome {
        start_epoch,
        epochs: trainer.epoch,
        best_epoch,
        initial,
        last,
    })
}

pub fn cmd_train_phoneme(cfg: &RunConfig) -> CliResult<PhonemeCheckpoint> {
    cfg.validate()?;
    let corpus = ProcessedCorpus::open(&cfg.out)?;
    let spec = build_spec(cfg, &corpus)?;
    let train = phoneme_samples(&corpus, "train", &spec)?;
    let val = phoneme_samples(&corpus, "val", &spec)?;
    let run = train_phoneme(spec, &train, &val, &cfg.optim, cfg.seed)?;
    let dir = cfg.out.join(PHONEME_DIR);
    std::fs::create_dir_all(&dir)?;
    let mut log = String::from("epoch,train_loss,validation_loss\n");
    for h in &run.history {
        let _ = writeln!(log, "{},{},{}", h.epoch + 1, h.train_loss, h.validation_loss);
    }
    std::fs::write(cfg.out.join(PHONEME_LOG), log)?;
    let best = run
        .best_epoch
        .checked_sub(1)
        .and_then(|i| run.history.get(i))
        .map(|h| h.validation_loss);
    let ckpt = PhonemeCheckpoint {
        epoch: run.best_epoch,
        validation_loss: best,
        model: run.best,
    };
    write_json(&dir.join(BEST), &ckpt)?;
    Ok(ckpt)
}
