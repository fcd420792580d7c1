use std::path::{Path, PathBuf};

use cospeech::metrics::AutoencoderConfig;
use cospeech::motion::ChunkConfig;
use cospeech::net::{ArchConfig, DimensionPlan};
use cospeech::train::{LossWeights, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::synthetic::SyntheticCorpusSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> CliResult<()> {
        let r = [self.train, self.val, self.test];
        if r.iter().any(|v| !(0.0..=1.0).contains(v)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CliError::invalid(format!(
                "split ratios {r:?} must be in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Everything a run needs, read from TOML. Missing keys take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Raw corpus in the clip-directory layout.
    pub corpus: PathBuf,
    /// Run directory: processed corpus, checkpoints, logs and outputs.
    pub out: PathBuf,
    pub split: SplitRatios,
    pub chunk: ChunkConfig,
    pub reference_frame: usize,
    pub plan: DimensionPlan,
    pub arch: ArchConfig,
    pub loss: LossWeights,
    pub optim: OptimizerConfig,
    pub checkpoint_every: usize,
    pub autoencoder: AutoencoderConfig,
    pub synthetic: SyntheticCorpusSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            corpus: "corpus".into(),
            out: "run".into(),
            split: SplitRatios::default(),
            chunk: ChunkConfig::default(),
            reference_frame: 0,
            plan: DimensionPlan::default(),
            arch: ArchConfig::default(),
            loss: LossWeights::default(),
            optim: OptimizerConfig::default(),
            checkpoint_every: 10,
            autoencoder: AutoencoderConfig::default(),
            synthetic: SyntheticCorpusSpec::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path` when given; relative paths inside resolve against the
    /// config file's directory.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.corpus = base.join(&cfg.corpus);
        cfg.out = base.join(&cfg.out);
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.split.validate()?;
        self.plan.validate()?;
        self.arch.validate()?;
        self.loss.validate()?;
        self.optim.validate()?;
        self.synthetic.validate()?;
        if self.checkpoint_every == 0 {
            return Err(CliError::invalid("checkpoint_every must be positive"));
        }
        if self.chunk.window != cospeech::motion::WINDOW_FRAMES || self.chunk.seed != cospeech::motion::SEED_FRAMES {
            return Err(CliError::invalid(format!(
                "windows are {} frames with {} seed frames",
                cospeech::motion::WINDOW_FRAMES,
                cospeech::motion::SEED_FRAMES
            )));
        }
        if self.chunk.stride == 0 {
            return Err(CliError::invalid("chunk stride must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 9\n[optim]\nepochs = 3\n").unwrap();
        let c = RunConfig::load(Some(&p)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.optim.epochs, 3);
        assert_eq!(c.optim.generator_lr, 1e-4);
        assert_eq!(c.split, SplitRatios::default());
        assert_eq!(c.out, dir.path().join("run"));
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_and_rejections() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
        let bad = RunConfig {
            split: SplitRatios {
                train: 0.8,
                val: 0.1,
                test: 0.2,
            },
            ..RunConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
    }
}
