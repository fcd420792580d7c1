use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::phoneme_loss;
use super::optim::{accumulate, scale_all, Adam, OptimizerConfig};
use crate::audio::{log_mel_spectrogram, FeatureConfig, FeatureNorm};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::motion::MotionSample;
use crate::net::{Bind, NetworkSpec, ParamSet, PhonemePredictor};

/// Spectrogram frames paired with lip landmark positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeSample {
    /// `[T, mel_bands]` raw log-mel energies.
    pub mel: Tensor,
    /// `[T, L_lip, 3]` in millimetres.
    pub lips: Tensor,
}

impl PhonemeSample {
    pub fn from_window(window: &MotionSample, spec: &NetworkSpec, cfg: &FeatureConfig) -> Result<Self> {
        if cfg.mel_bands != spec.mel_bands {
            return Err(Error::shape(format!(
                "{} mel bands, expected {}",
                cfg.mel_bands, spec.mel_bands
            )));
        }
        let t = window.frames();
        let mel = log_mel_spectrogram(&window.audio, t, cfg)?;
        let lips = window.face.positions.select_points(&spec.face.lips);
        Ok(Self {
            mel: Tensor::new(vec![t, cfg.mel_bands], mel),
            lips: Tensor::new(vec![t, spec.lips(), 3], lips.into_data()),
        })
    }
}

/// Trained phoneme predictor with its input statistics and lip template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeModel {
    pub spec: NetworkSpec,
    pub template: Vec<f64>,
    pub output_scale: f64,
    pub mel_norm: FeatureNorm,
    pub params: ParamSet,
}

impl PhonemeModel {
    /// Template = mean lip shape, scale = RMS deviation from it.
    pub fn new(spec: NetworkSpec, train: &[PhonemeSample], seed: u64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let width = spec.lips() * 3;
        let mut template = vec![0.0; width];
        let mut n = 0usize;
        for s in train {
            if s.lips.shape[1..] != [spec.lips(), 3] || s.mel.shape[1..] != [spec.mel_bands] {
                return Err(Error::shape(format!(
                    "phoneme sample {:?} / {:?}",
                    s.mel.shape, s.lips.shape
                )));
            }
            for row in s.lips.data.chunks_exact(width) {
                template.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                n += 1;
            }
        }
        template.iter_mut().for_each(|v| *v /= n as f64);
        let sq: f64 = train
            .iter()
            .flat_map(|s| s.lips.data.chunks_exact(width))
            .flat_map(|row| row.iter().zip(&template).map(|(a, b)| (a - b) * (a - b)))
            .sum();
        let output_scale = (sq / (n * width) as f64).sqrt().max(1e-3);
        let mel_norm = FeatureNorm::fit(train.iter().map(|s| s.mel.data.as_slice()), spec.mel_bands);
        let mut p = PhonemePredictor::new(&spec, template.clone())?;
        p.output_scale = output_scale;
        let params = p.init(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Self {
            spec,
            template,
            output_scale,
            mel_norm,
            params,
        })
    }

    pub fn predictor(&self) -> PhonemePredictor {
        let mut p = PhonemePredictor::new(&self.spec, self.template.clone()).expect("validated template");
        p.output_scale = self.output_scale;
        p
    }

    fn normalized(&self, mel: &Tensor) -> Tensor {
        Tensor::new(mel.shape.clone(), self.mel_norm.apply(&mel.data))
    }

    /// Lip positions `[T, L_lip, 3]` in millimetres for a raw spectrogram.
    pub fn predict(&self, mel: &Tensor) -> Result<Tensor> {
        self.predictor().run(&self.params, &self.normalized(mel))
    }

    /// Mean per-sample loss, in units of `output_scale`.
    pub fn loss(&self, data: &[PhonemeSample]) -> Result<f64> {
        let p = self.predictor();
        let mut sum = 0.0;
        for s in data {
            let mut tape = Tape::new();
            let mut b = Bind::frozen(&self.params);
            sum += self.sample_loss(&p, &mut tape, &mut b, s)?.1;
        }
        Ok(sum / data.len().max(1) as f64)
    }

    fn sample_loss(
        &self,
        p: &PhonemePredictor,
        tape: &mut Tape,
        b: &mut Bind,
        s: &PhonemeSample,
    ) -> Result<(crate::autodiff::Var, f64)> {
        let mel = tape.constant(self.normalized(&s.mel));
        let syn = p.forward(tape, b, mel)?;
        let gt = tape.constant(s.lips.clone());
        let l = phoneme_loss(tape, gt, syn)?;
        let l = tape.scale(l, 1.0 / self.output_scale);
        let v = tape.scalar(l);
        Ok((l, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeEpoch {
    pub epoch: usize,
    /// Mean loss over the epoch's batches, each taken before its update.
    pub train_loss: f64,
    pub validation_loss: f64,
}

pub struct PhonemeRun {
    /// Weights with the lowest validation loss (training loss without a
    /// validation split).
    pub best: PhonemeModel,
    pub best_epoch: usize,
    pub last: PhonemeModel,
    pub history: Vec<PhonemeEpoch>,
}

/// Adam on the phoneme loss for `opt.phoneme_epochs` epochs.
pub fn train_phoneme(
    spec: NetworkSpec,
    train: &[PhonemeSample],
    validation: &[PhonemeSample],
    opt: &OptimizerConfig,
    seed: u64,
) -> Result<PhonemeRun> {
    opt.validate()?;
    let mut model = PhonemeModel::new(spec, train, seed)?;
    let pred = model.predictor();
    let mut adam = Adam::new(&model.params, opt.beta1, opt.beta2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut lr = opt.phoneme_lr;
    let mut best = (f64::INFINITY, model.clone(), 0);
    let mut history = Vec::with_capacity(opt.phoneme_epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..opt.phoneme_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(opt.phoneme_batch_size) {
            let mut acc = model.params.zeros_like();
            for &i in idx {
                let mut tape = Tape::new();
                let mut b = Bind::trainable(&model.params);
                let (l, v) = model.sample_loss(&pred, &mut tape, &mut b, &train[i])?;
                epoch_loss += v;
                let mut g = tape.backward(l);
                accumulate(&mut acc, &b.gradients(&mut g));
            }
            scale_all(&mut acc, 1.0 / idx.len() as f64);
            adam.update(&mut model.params, &acc, lr)?;
        }
        lr *= opt.lr_decay;
        let train_loss = epoch_loss / train.len() as f64;
        let validation_loss = if validation.is_empty() {
            model.loss(train)?
        } else {
            model.loss(validation)?
        };
        if validation_loss < best.0 {
            best = (validation_loss, model.clone(), epoch + 1);
        }
        history.push(PhonemeEpoch {
            epoch,
            train_loss,
            validation_loss,
        });
    }
    Ok(PhonemeRun {
        best: best.1,
        best_epoch: best.2,
        last: model,
        history,
    })
}
