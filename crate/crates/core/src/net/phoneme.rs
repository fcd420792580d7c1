use rand::Rng;

use super::layers::{Linear, TemporalConv};
use super::params::{Bind, ParamSet};
use super::NetworkSpec;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Spectrogram frames to lip landmark positions: two temporal convolutions,
/// two fully connected layers, plus a fixed lip template the network learns
/// offsets from.
#[derive(Clone, Debug)]
pub struct PhonemePredictor {
    c1: TemporalConv,
    c2: TemporalConv,
    fc1: Linear,
    fc2: Linear,
    pub mel_bands: usize,
    pub lips: usize,
    pub template: Vec<f64>,
    /// Multiplier on the network output before the template is added, so
    /// unit-scale activations map to millimetre offsets.
    pub output_scale: f64,
}

impl PhonemePredictor {
    /// `template` holds `L_lip × 3` rest positions.
    pub fn new(spec: &NetworkSpec, template: Vec<f64>) -> Result<Self> {
        let lips = spec.lips();
        if template.len() != lips * 3 {
            return Err(Error::shape(format!(
                "lip template has {} values, expected {}",
                template.len(),
                lips * 3
            )));
        }
        let c = spec.arch.phoneme_channels;
        let k = spec.arch.conv_kernel;
        Ok(Self {
            c1: TemporalConv::new("phoneme/0", k, spec.mel_bands, c),
            c2: TemporalConv::new("phoneme/1", k, c, c),
            fc1: Linear::new("phoneme/fc0", c, c),
            fc2: Linear::new("phoneme/fc1", c, lips * 3),
            mel_bands: spec.mel_bands,
            lips,
            template,
            output_scale: 1.0,
        })
    }

    pub fn init(&self, rng: &mut impl Rng) -> ParamSet {
        let mut ps = ParamSet::new();
        self.c1.init(&mut ps, rng);
        self.c2.init(&mut ps, rng);
        self.fc1.init(&mut ps, rng);
        self.fc2.init(&mut ps, rng);
        ps
    }

    /// `[T, mel_bands] → [T, L_lip, 3]`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, mel: Var) -> Result<Var> {
        let s = tape.shape(mel).to_vec();
        if s.len() != 2 || s[1] != self.mel_bands {
            return Err(Error::shape(format!(
                "spectrogram {s:?}, expected [T, {}]",
                self.mel_bands
            )));
        }
        let h = self.c1.forward_seq(tape, b, mel);
        let h = tape.leaky_relu(h, super::layers::LEAKY_SLOPE);
        let h = self.c2.forward_seq(tape, b, h);
        let h = tape.leaky_relu(h, super::layers::LEAKY_SLOPE);
        let h = self.fc1.forward_act(tape, b, h);
        let o = self.fc2.forward(tape, b, h);
        let o = tape.scale(o, self.output_scale);
        let tmpl = tape.constant(Tensor::new(vec![self.lips * 3], self.template.clone()));
        let o = tape.add_bias(o, tmpl);
        Ok(tape.reshape(o, vec![s[0], self.lips, 3]))
    }

    pub fn run(&self, params: &ParamSet, mel: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let mut b = Bind::frozen(params);
        let m = tape.constant(mel.clone());
        let p = self.forward(&mut tape, &mut b, m)?;
        Ok(tape.value(p).clone())
    }
}
