use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frechet::{frechet_distance, FeatureGaussian};
use crate::audio::FeatureNorm;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::motion::PointSeq;
use crate::net::layers::{Linear, TemporalConv, LEAKY_SLOPE};
use crate::net::{Bind, ParamSet};
use crate::train::Adam;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub feature_dim: usize,
    pub hidden: usize,
    pub kernel: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            feature_dim: 32,
            hidden: 16,
            kernel: 3,
            epochs: 300,
            lr: 1e-3,
            batch_size: 16,
        }
    }
}

/// Temporal-convolutional autoencoder over windows flattened to
/// `[T, 3N]` channels: conv, flatten, linear to the feature vector, and the
/// mirror image back.
#[derive(Clone, Debug)]
pub struct MotionAutoencoder {
    pub frames: usize,
    pub channels: usize,
    conv_in: TemporalConv,
    enc: Linear,
    dec: Linear,
    conv_out: TemporalConv,
    hidden: usize,
}

impl MotionAutoencoder {
    pub fn new(frames: usize, points: usize, cfg: &AutoencoderConfig) -> Self {
        let c = points * 3;
        let h = cfg.hidden;
        Self {
            frames,
            channels: c,
            conv_in: TemporalConv::new("ae/conv_in", cfg.kernel, c, h),
            enc: Linear::new("ae/enc", frames * h, cfg.feature_dim),
            dec: Linear::new("ae/dec", cfg.feature_dim, frames * h),
            conv_out: TemporalConv::new("ae/conv_out", cfg.kernel, h, c),
            hidden: h,
        }
    }

    pub fn init(&self, rng: &mut impl rand::Rng) -> ParamSet {
        let mut ps = ParamSet::new();
        self.conv_in.init(&mut ps, rng);
        self.enc.init(&mut ps, rng);
        self.dec.init(&mut ps, rng);
        self.conv_out.init(&mut ps, rng);
        ps
    }

    /// `[T, C] → [D]`.
    pub fn encode(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let h = self.conv_in.forward_seq(tape, b, x);
        let h = tape.leaky_relu(h, LEAKY_SLOPE);
        let flat = tape.reshape(h, vec![1, self.frames * self.hidden]);
        let z = self.enc.forward(tape, b, flat);
        let d = tape.shape(z)[1];
        tape.reshape(z, vec![d])
    }

    /// `[D] → [T, C]`.
    pub fn decode(&self, tape: &mut Tape, b: &mut Bind, z: Var) -> Var {
        let d = tape.shape(z)[0];
        let z = tape.reshape(z, vec![1, d]);
        let h = self.dec.forward_act(tape, b, z);
        let h = tape.reshape(h, vec![self.frames, self.hidden]);
        self.conv_out.forward_seq(tape, b, h)
    }
}

/// An autoencoder trained on ground-truth windows, with the channel
/// statistics used to normalize its input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedAutoencoder {
    pub frames: usize,
    pub points: usize,
    pub config: AutoencoderConfig,
    pub norm: FeatureNorm,
    pub params: ParamSet,
    /// Mean absolute reconstruction error on the training windows, in input units.
    pub train_error: f64,
}

fn window_shape(windows: &[PointSeq]) -> Result<(usize, usize)> {
    let first = windows.first().ok_or(Error::EmptyCorpus)?;
    let (t, n) = (first.frames(), first.points());
    if let Some(w) = windows.iter().find(|w| w.frames() != t || w.points() != n) {
        return Err(Error::shape(format!(
            "window {}x{} among {t}x{n}",
            w.frames(),
            w.points()
        )));
    }
    Ok((t, n))
}

impl TrainedAutoencoder {
    pub fn train(windows: &[PointSeq], cfg: &AutoencoderConfig, seed: u64) -> Result<Self> {
        let (t, n) = window_shape(windows)?;
        if cfg.feature_dim == 0 || cfg.hidden == 0 || cfg.batch_size == 0 || cfg.kernel % 2 == 0 {
            return Err(Error::InvalidConfig(format!("autoencoder config {cfg:?}")));
        }
        let norm = FeatureNorm::fit(windows.iter().map(|w| w.data()), n * 3);
        let inputs: Vec<Tensor> = windows
            .iter()
            .map(|w| Tensor::new(vec![t, n * 3], norm.apply(w.data())))
            .collect();
        let net = MotionAutoencoder::new(t, n, cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = net.init(&mut rng);
        let mut adam = Adam::new(&params, 0.9, 0.999);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for idx in order.chunks(cfg.batch_size) {
                let mut acc = params.zeros_like();
                for &i in idx {
                    let mut tape = Tape::new();
                    let mut b = Bind::trainable(&params);
                    let x = tape.constant(inputs[i].clone());
                    let z = net.encode(&mut tape, &mut b, x);
                    let y = net.decode(&mut tape, &mut b, z);
                    let d = tape.sub(y, x);
                    let a = tape.abs(d);
                    let l = tape.mean(a);
                    let mut g = tape.backward(l);
                    let gi = b.gradients(&mut g);
                    for ((_, s), (_, v)) in acc.iter_mut().zip(gi.iter()) {
                        s.data
                            .iter_mut()
                            .zip(&v.data)
                            .for_each(|(p, q)| *p += q / idx.len() as f64);
                    }
                }
                adam.update(&mut params, &acc, cfg.lr)?;
            }
        }
        let mut ae = Self {
            frames: t,
            points: n,
            config: cfg.clone(),
            norm,
            params,
            train_error: 0.0,
        };
        ae.train_error = ae.reconstruction_error(windows)?;
        Ok(ae)
    }

    fn network(&self) -> MotionAutoencoder {
        MotionAutoencoder::new(self.frames, self.points, &self.config)
    }

    fn check(&self, w: &PointSeq) -> Result<()> {
        if w.frames() != self.frames || w.points() != self.points {
            return Err(Error::shape(format!(
                "window {}x{}, encoder expects {}x{}",
                w.frames(),
                w.points(),
                self.frames,
                self.points
            )));
        }
        Ok(())
    }

    pub fn encode(&self, w: &PointSeq) -> Result<Vec<f64>> {
        self.check(w)?;
        let mut tape = Tape::new();
        let mut b = Bind::frozen(&self.params);
        let x = tape.constant(Tensor::new(
            vec![self.frames, self.points * 3],
            self.norm.apply(w.data()),
        ));
        let z = self.network().encode(&mut tape, &mut b, x);
        Ok(tape.value(z).data.clone())
    }

    pub fn reconstruct(&self, w: &PointSeq) -> Result<PointSeq> {
        self.check(w)?;
        let net = self.network();
        let mut tape = Tape::new();
        let mut b = Bind::frozen(&self.params);
        let x = tape.constant(Tensor::new(
            vec![self.frames, self.points * 3],
            self.norm.apply(w.data()),
        ));
        let z = net.encode(&mut tape, &mut b, x);
        let y = net.decode(&mut tape, &mut b, z);
        let c = self.points * 3;
        let data = tape
            .value(y)
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.norm.std[k % c] + self.norm.mean[k % c])
            .collect();
        PointSeq::new(self.frames, self.points, data)
    }

    /// Mean absolute reconstruction error in input units.
    pub fn reconstruction_error(&self, windows: &[PointSeq]) -> Result<f64> {
        window_shape(windows)?;
        let mut sum = 0.0;
        let mut n = 0usize;
        for w in windows {
            let r = self.reconstruct(w)?;
            sum += w.data().iter().zip(r.data()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            n += w.data().len();
        }
        Ok(sum / n as f64)
    }

    fn gaussian(&self, windows: &[PointSeq]) -> Result<FeatureGaussian> {
        let feats = windows.iter().map(|w| self.encode(w)).collect::<Result<Vec<_>>>()?;
        FeatureGaussian::fit_or_shrink(&feats)
    }
}

/// Fréchet landmark distance between two corpora of face windows.
pub fn fld(gt: &[PointSeq], syn: &[PointSeq], encoder: &TrainedAutoencoder) -> Result<f64> {
    frechet_distance(&encoder.gaussian(gt)?, &encoder.gaussian(syn)?)
}

/// Fréchet gesture distance between two corpora of joint windows.
pub fn fgd(gt: &[PointSeq], syn: &[PointSeq], encoder: &TrainedAutoencoder) -> Result<f64> {
    fld(gt, syn, encoder)
}
