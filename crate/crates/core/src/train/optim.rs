use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::ParamSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub phoneme_lr: f64,
    pub phoneme_batch_size: usize,
    pub phoneme_epochs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            beta1: 0.5,
            beta2: 0.999,
            generator_lr: 1e-4,
            discriminator_lr: 5e-5,
            lr_decay: 0.999,
            batch_size: 256,
            epochs: 1000,
            phoneme_lr: 1e-3,
            phoneme_batch_size: 1024,
            phoneme_epochs: 500,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let betas = [self.beta1, self.beta2];
        if betas.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        let rates = [self.generator_lr, self.discriminator_lr, self.phoneme_lr, self.lr_decay];
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidConfig(
                "learning rates must be finite and nonnegative".into(),
            ));
        }
        if self.batch_size == 0 || self.phoneme_batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: ParamSet,
    v: ParamSet,
}

impl Adam {
    pub fn new(params: &ParamSet, beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// One bias-corrected Adam step.
    pub fn update(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) -> Result<()> {
        params.check_compatible(grads)?;
        params.check_compatible(&self.m)?;
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (self.beta1, self.beta2);
        for ((name, p), ((_, m), (_, v))) in params.iter_mut().zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let g = &grads.get(name).expect("checked compatible").data;
            for i in 0..p.data.len() {
                m.data[i] = b1 * m.data[i] + (1.0 - b1) * g[i];
                v.data[i] = b2 * v.data[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.data[i] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Adds `g` into `acc` entry by entry.
pub(crate) fn accumulate(acc: &mut ParamSet, g: &ParamSet) {
    for (name, t) in acc.iter_mut() {
        let src = &g.get(name).expect("same names").data;
        t.data.iter_mut().zip(src).for_each(|(a, b)| *a += b);
    }
}

pub(crate) fn scale_all(ps: &mut ParamSet, k: f64) {
    for (_, t) in ps.iter_mut() {
        t.data.iter_mut().for_each(|v| *v *= k);
    }
}
