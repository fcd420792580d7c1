#![allow(dead_code)]

use std::path::Path;

use cospeech::motion::ChunkConfig;
use cospeech::net::DimensionPlan;
use cospeech_cli::config::RunConfig;
use cospeech_cli::synthetic::SyntheticCorpusSpec;

/// Small enough for a full pipeline in a few seconds.
pub fn tiny_config(root: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        seed: 5,
        corpus: root.join("corpus"),
        out: root.join("run"),
        checkpoint_every: 1,
        chunk: ChunkConfig {
            stride: 34,
            ..Default::default()
        },
        plan: DimensionPlan::uniform(4).unwrap(),
        synthetic: SyntheticCorpusSpec {
            speakers: 2,
            clips_per_speaker: 5,
            frames: 102,
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.arch.graph_depth = 1;
    cfg.arch.decoder_hidden = 8;
    cfg.arch.discriminator_hidden = 8;
    cfg.arch.phoneme_channels = 8;
    cfg.arch.hash_buckets = 4;
    cfg.optim.batch_size = 4;
    cfg.optim.epochs = 2;
    cfg.optim.phoneme_epochs = 2;
    cfg.optim.phoneme_batch_size = 8;
    cfg.autoencoder.epochs = 3;
    cfg.autoencoder.feature_dim = 4;
    cfg
}

pub fn tiny_toml(root: &Path) -> std::path::PathBuf {
    let mut cfg = tiny_config(root);
    cfg.corpus = "corpus".into();
    cfg.out = "run".into();
    let path = root.join("run.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

/// Synthetic corpus, preprocessing, both trainings.
pub fn trained(root: &Path) -> RunConfig {
    let cfg = tiny_config(root);
    cospeech_cli::synthetic::write_corpus(&cfg.corpus, &cfg.synthetic, &cfg.split, cfg.seed).unwrap();
    cospeech_cli::preprocess::cmd_preprocess(&cfg).unwrap();
    cospeech_cli::train::cmd_train(&cfg, false).unwrap();
    cospeech_cli::train::cmd_train_phoneme(&cfg).unwrap();
    cfg
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
