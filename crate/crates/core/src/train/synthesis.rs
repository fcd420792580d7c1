use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::losses::{
    check_distinct_speakers, csd_loss, discriminator_loss_logit, generator_adversarial_loss_logit, motion_distance,
    reconstruction_loss, LossWeights, MotionVars,
};
use super::optim::{accumulate, scale_all, Adam, OptimizerConfig};
use crate::audio::{compute_mfcc, FeatureNorm, MfccConfig};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::metrics::{maje, male};
use crate::motion::{face_to_deltas, one_hot, pose_to_units, MotionSample, PointSeq, ReferenceFace};
use crate::net::{Bind, Discriminator, Generator, GeneratorInput, NetworkSpec, ParamSet};

/// One training window in model-ready form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub speaker: usize,
    /// `[T, M]` raw MFCCs; normalization happens when inputs are built.
    pub mfcc: Tensor,
    pub word_rows: Vec<usize>,
    /// `[T, L, 3]` in millimetres.
    pub face_deltas: Tensor,
    /// `[T, J − 1, 3]`.
    pub pose_units: Tensor,
}

fn to_tensor(p: &PointSeq) -> Tensor {
    Tensor::new(vec![p.frames(), p.points(), 3], p.data().to_vec())
}

pub(crate) fn to_points(t: &Tensor) -> PointSeq {
    PointSeq::new(t.shape[0], t.shape[1], t.data.clone()).expect("[T, N, 3] tensor")
}

impl TrainSample {
    /// Features and motion representation of one window.
    pub fn from_window(
        window: &MotionSample,
        reference: &ReferenceFace,
        spec: &NetworkSpec,
        mfcc: &MfccConfig,
    ) -> Result<Self> {
        let t = window.frames();
        if t != spec.frames {
            return Err(Error::shape(format!("window has {t} frames, expected {}", spec.frames)));
        }
        if mfcc.width() != spec.mfcc_dim {
            return Err(Error::shape(format!(
                "mfcc width {} != {}",
                mfcc.width(),
                spec.mfcc_dim
            )));
        }
        let m = compute_mfcc(&window.audio, t, mfcc)?;
        let deltas = face_to_deltas(&window.face, reference)?;
        let units = pose_to_units(&window.pose, &spec.pose.skeleton)?;
        Ok(Self {
            speaker: window.speaker,
            mfcc: Tensor::new(vec![t, spec.mfcc_dim], m),
            word_rows: spec.vocabulary.frame_rows(&window.transcript, t),
            face_deltas: to_tensor(&deltas.deltas),
            pose_units: to_tensor(&units.vectors),
        })
    }
}

/// Generator and discriminator weights plus everything needed to feed them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisModel {
    pub spec: NetworkSpec,
    /// Millimetres per network unit of face deltas.
    pub face_scale: f64,
    /// Millimetres per unit of joint position inside the loss.
    pub pose_scale: f64,
    pub mfcc_norm: FeatureNorm,
    pub generator: ParamSet,
    pub discriminator: ParamSet,
}

/// Architectures built from a [`SynthesisModel`]'s spec.
#[derive(Clone, Debug)]
pub struct Networks {
    pub generator: Generator,
    pub discriminator: Discriminator,
    /// Forward-kinematics matrix divided by `pose_scale`.
    fk: Arc<[f64]>,
    joints: usize,
}

impl SynthesisModel {
    /// Fresh weights; scales and MFCC statistics come from the training set.
    pub fn new(spec: NetworkSpec, train: &[TrainSample], rng: &mut impl Rng) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let sq: f64 = train.iter().flat_map(|s| &s.face_deltas.data).map(|v| v * v).sum();
        let n: usize = train.iter().map(|s| s.face_deltas.len()).sum();
        let face_scale = (sq / n as f64).sqrt().max(1e-3);
        let sk = &spec.pose.skeleton;
        let pose_scale = sk.bone_lengths.iter().sum::<f64>() / sk.bones() as f64;
        let mfcc_norm = FeatureNorm::fit(train.iter().map(|s| s.mfcc.data.as_slice()), spec.mfcc_dim);
        let generator = Generator::new(&spec).init(rng);
        let discriminator = Discriminator::new(&spec).init(rng);
        Ok(Self {
            spec,
            face_scale,
            pose_scale,
            mfcc_norm,
            generator,
            discriminator,
        })
    }

    pub fn networks(&self) -> Networks {
        let sk = &self.spec.pose.skeleton;
        let fk: Arc<[f64]> = sk
            .forward_kinematics_matrix()
            .iter()
            .map(|v| v / self.pose_scale)
            .collect();
        Networks {
            generator: Generator::new(&self.spec),
            discriminator: Discriminator::new(&self.spec),
            fk,
            joints: sk.joints(),
        }
    }

    /// Generator input for `sample`: its seed frames, features and speaker.
    pub fn input(&self, sample: &TrainSample, speaker: usize, noise: Vec<f64>) -> GeneratorInput {
        let ts = self.spec.seed_frames;
        let face_seed = self.scaled_face(&sample.face_deltas);
        let per_f = face_seed.len() / face_seed.shape[0];
        let per_p = sample.pose_units.len() / sample.pose_units.shape[0];
        GeneratorInput {
            mfcc: Tensor::new(sample.mfcc.shape.clone(), self.mfcc_norm.apply(&sample.mfcc.data)),
            word_rows: sample.word_rows.clone(),
            speaker: one_hot(speaker, self.spec.speakers),
            noise,
            face_seed: Tensor::new(vec![ts, face_seed.shape[1], 3], face_seed.data[..ts * per_f].to_vec()),
            pose_seed: Tensor::new(
                vec![ts, sample.pose_units.shape[1], 3],
                sample.pose_units.data[..ts * per_p].to_vec(),
            ),
        }
    }

    fn scaled_face(&self, deltas: &Tensor) -> Tensor {
        Tensor::new(
            deltas.shape.clone(),
            deltas.data.iter().map(|v| v / self.face_scale).collect(),
        )
    }

    /// Face deltas in millimetres and unit bone vectors for one window.
    pub fn synthesize(&self, nets: &Networks, input: &GeneratorInput) -> Result<(Tensor, Tensor)> {
        let (face, pose) = nets.generator.run(&self.generator, input)?;
        let mm = Tensor::new(
            face.shape.clone(),
            face.data.iter().map(|v| v * self.face_scale).collect(),
        );
        Ok((mm, pose))
    }
}

/// Per-sample means of the loss terms over one step or epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub reconstruction: f64,
    pub csd: f64,
    pub adversarial: f64,
    pub discriminator: f64,
    pub total: f64,
}

impl StepLosses {
    fn add_scaled(&mut self, o: &StepLosses, k: f64) {
        self.reconstruction += k * o.reconstruction;
        self.csd += k * o.csd;
        self.adversarial += k * o.adversarial;
        self.discriminator += k * o.discriminator;
        self.total += k * o.total;
    }
}

/// Reconstruction errors of a set of windows, in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub male: f64,
    pub maje: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: [u8; 32],
    stream: u64,
    word_pos: String,
}

impl RngState {
    fn capture(r: &ChaCha8Rng) -> Self {
        Self {
            seed: r.get_seed(),
            stream: r.get_stream(),
            word_pos: r.get_word_pos().to_string(),
        }
    }

    fn restore(&self) -> Result<ChaCha8Rng> {
        let mut r = ChaCha8Rng::from_seed(self.seed);
        r.set_stream(self.stream);
        let pos = self
            .word_pos
            .parse()
            .map_err(|_| Error::Format(format!("bad rng position {}", self.word_pos)))?;
        r.set_word_pos(pos);
        Ok(r)
    }
}

/// Everything a resumed run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub model: SynthesisModel,
    pub weights: LossWeights,
    pub opt: OptimizerConfig,
    pub epoch: usize,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    pub sample_noise: bool,
    generator_adam: Adam,
    discriminator_adam: Adam,
    rng: RngState,
}

/// Adversarial training loop over [`TrainSample`]s.
pub struct Trainer {
    pub model: SynthesisModel,
    pub weights: LossWeights,
    pub opt: OptimizerConfig,
    pub epoch: usize,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    /// Draw `k̂` noise per sample; when false the speaker code is `μ`.
    pub sample_noise: bool,
    nets: Networks,
    generator_adam: Adam,
    discriminator_adam: Adam,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: SynthesisModel, weights: LossWeights, opt: OptimizerConfig, seed: u64) -> Result<Self> {
        weights.validate()?;
        opt.validate()?;
        let nets = model.networks();
        let generator_adam = Adam::new(&model.generator, opt.beta1, opt.beta2);
        let discriminator_adam = Adam::new(&model.discriminator, opt.beta1, opt.beta2);
        Ok(Self {
            generator_lr: opt.generator_lr,
            discriminator_lr: opt.discriminator_lr,
            model,
            weights,
            opt,
            epoch: 0,
            sample_noise: true,
            nets,
            generator_adam,
            discriminator_adam,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn state(&self) -> TrainerState {
        TrainerState {
            model: self.model.clone(),
            weights: self.weights.clone(),
            opt: self.opt.clone(),
            epoch: self.epoch,
            generator_lr: self.generator_lr,
            discriminator_lr: self.discriminator_lr,
            sample_noise: self.sample_noise,
            generator_adam: self.generator_adam.clone(),
            discriminator_adam: self.discriminator_adam.clone(),
            rng: RngState::capture(&self.rng),
        }
    }

    pub fn from_state(s: TrainerState) -> Result<Self> {
        s.model
            .generator
            .check_compatible(&Generator::new(&s.model.spec).init(&mut ChaCha8Rng::seed_from_u64(0)))?;
        Ok(Self {
            nets: s.model.networks(),
            rng: s.rng.restore()?,
            model: s.model,
            weights: s.weights,
            opt: s.opt,
            epoch: s.epoch,
            generator_lr: s.generator_lr,
            discriminator_lr: s.discriminator_lr,
            sample_noise: s.sample_noise,
            generator_adam: s.generator_adam,
            discriminator_adam: s.discriminator_adam,
        })
    }

    pub fn networks(&self) -> &Networks {
        &self.nets
    }

    fn noise(&mut self) -> Vec<f64> {
        let d = self.model.spec.plan.d_k;
        if self.sample_noise {
            (0..d).map(|_| self.rng.sample(StandardNormal)).collect()
        } else {
            vec![0.0; d]
        }
    }

    fn other_speaker(&mut self, speaker: usize) -> usize {
        let k = self.model.spec.speakers;
        let o = self.rng.random_range(0..k - 1);
        if o >= speaker {
            o + 1
        } else {
            o
        }
    }

    /// Ground-truth operands of the reconstruction loss.
    fn gt_vars(&self, tape: &mut Tape, s: &TrainSample) -> MotionVars {
        let f = tape.constant(self.model.scaled_face(&s.face_deltas));
        let u = tape.constant(s.pose_units.clone());
        let p = tape.node_mix(u, self.nets.fk.clone(), self.nets.joints);
        MotionVars {
            face: f,
            face_deltas: f,
            pose: p,
            pose_units: u,
        }
    }

    /// Generator loss of one sample and its terms.
    fn generator_loss(
        &self,
        tape: &mut Tape,
        b: &mut Bind,
        s: &TrainSample,
        noise: &[f64],
        other: Option<usize>,
    ) -> Result<(Var, StepLosses)> {
        let w = &self.weights;
        let gt = self.gt_vars(tape, s);
        let out = self
            .nets
            .generator
            .forward(tape, b, &self.model.input(s, s.speaker, noise.to_vec()))?;
        let pos = tape.node_mix(out.pose, self.nets.fk.clone(), self.nets.joints);
        let syn = MotionVars {
            face: out.face,
            face_deltas: out.face,
            pose: pos,
            pose_units: out.pose,
        };
        let rec = reconstruction_loss(tape, &gt, &syn, w)?;
        let mut terms = StepLosses {
            reconstruction: tape.scalar(rec),
            ..Default::default()
        };
        let mut total = rec;
        if let Some(o) = other {
            check_distinct_speakers(s.speaker, o)?;
            let alt = self
                .nets
                .generator
                .forward(tape, b, &self.model.input(s, o, noise.to_vec()))?;
            let d_same = motion_distance(tape, gt.face, gt.pose_units, out.face, out.pose)?;
            let d_other = motion_distance(tape, gt.face, gt.pose_units, alt.face, alt.pose)?;
            let c = csd_loss(tape, d_same, d_other, w.csd_margin);
            terms.csd = tape.scalar(c);
            let c = tape.scale(c, w.lambda_csd);
            total = tape.add(total, c);
        }
        if w.lambda_adv > 0.0 {
            let mut db = Bind::frozen(&self.model.discriminator);
            let z = self.nets.discriminator.logit(tape, &mut db, out.face, out.pose)?;
            let g = generator_adversarial_loss_logit(tape, z);
            terms.adversarial = tape.scalar(g);
            let g = tape.scale(g, w.lambda_adv);
            total = tape.add(total, g);
        }
        terms.total = tape.scalar(total);
        Ok((total, terms))
    }

    /// One discriminator update on real versus detached synthesized windows,
    /// then one generator update. Returns per-sample mean losses.
    pub fn train_step(&mut self, batch: &[&TrainSample]) -> Result<StepLosses> {
        if batch.is_empty() {
            return Err(Error::EmptySplit("batch".into()));
        }
        let inv = 1.0 / batch.len() as f64;
        let noises: Vec<Vec<f64>> = batch.iter().map(|_| self.noise()).collect();
        let use_csd = self.weights.lambda_csd > 0.0 && self.model.spec.speakers > 1;
        let others: Vec<Option<usize>> = batch
            .iter()
            .map(|s| use_csd.then(|| self.other_speaker(s.speaker)))
            .collect();
        let mut losses = StepLosses::default();

        if self.weights.lambda_adv > 0.0 {
            let mut acc = self.model.discriminator.zeros_like();
            for (s, noise) in batch.iter().zip(&noises) {
                let (face, pose) = self
                    .nets
                    .generator
                    .run(&self.model.generator, &self.model.input(s, s.speaker, noise.clone()))?;
                let mut tape = Tape::new();
                let mut b = Bind::trainable(&self.model.discriminator);
                let gf = tape.constant(self.model.scaled_face(&s.face_deltas));
                let gp = tape.constant(s.pose_units.clone());
                let sf = tape.constant(face);
                let sp = tape.constant(pose);
                let z_gt = self.nets.discriminator.logit(&mut tape, &mut b, gf, gp)?;
                let z_sn = self.nets.discriminator.logit(&mut tape, &mut b, sf, sp)?;
                let l = discriminator_loss_logit(&mut tape, z_gt, z_sn);
                losses.discriminator += inv * tape.scalar(l);
                let mut g = tape.backward(l);
                accumulate(&mut acc, &b.gradients(&mut g));
            }
            scale_all(&mut acc, inv);
            self.discriminator_adam
                .update(&mut self.model.discriminator, &acc, self.discriminator_lr)?;
        }

        let mut acc = self.model.generator.zeros_like();
        for ((s, noise), other) in batch.iter().zip(&noises).zip(&others) {
            let mut tape = Tape::new();
            let mut b = Bind::trainable(&self.model.generator);
            let (total, terms) = self.generator_loss(&mut tape, &mut b, s, noise, *other)?;
            let d = losses.discriminator;
            losses.add_scaled(&terms, inv);
            losses.discriminator = d;
            let mut g = tape.backward(total);
            accumulate(&mut acc, &b.gradients(&mut g));
        }
        scale_all(&mut acc, inv);
        let lr = self.generator_lr;
        self.generator_adam.update(&mut self.model.generator, &acc, lr)?;
        Ok(losses)
    }

    /// Shuffled pass over `data`, then one learning-rate decay.
    pub fn run_epoch(&mut self, data: &[TrainSample]) -> Result<StepLosses> {
        if data.is_empty() {
            return Err(Error::EmptySplit("train".into()));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut mean = StepLosses::default();
        for idx in order.chunks(self.opt.batch_size) {
            let batch: Vec<&TrainSample> = idx.iter().map(|&i| &data[i]).collect();
            let l = self.train_step(&batch)?;
            mean.add_scaled(&l, batch.len() as f64 / data.len() as f64);
        }
        self.epoch += 1;
        self.generator_lr *= self.opt.lr_decay;
        self.discriminator_lr *= self.opt.lr_decay;
        Ok(mean)
    }

    /// Mean per-sample reconstruction loss with `k̂ = μ` and CSD/adversarial
    /// terms off.
    pub fn reconstruction_loss(&self, data: &[TrainSample]) -> Result<f64> {
        let w = LossWeights {
            lambda_csd: 0.0,
            lambda_adv: 0.0,
            ..self.weights.clone()
        };
        let probe = Trainer {
            model: self.model.clone(),
            weights: w,
            opt: self.opt.clone(),
            epoch: self.epoch,
            generator_lr: 0.0,
            discriminator_lr: 0.0,
            sample_noise: false,
            nets: self.nets.clone(),
            generator_adam: self.generator_adam.clone(),
            discriminator_adam: self.discriminator_adam.clone(),
            rng: self.rng.clone(),
        };
        let zeros = vec![0.0; self.model.spec.plan.d_k];
        let mut sum = 0.0;
        for s in data {
            let mut tape = Tape::new();
            let mut b = Bind::frozen(&probe.model.generator);
            sum += probe
                .generator_loss(&mut tape, &mut b, s, &zeros, None)?
                .1
                .reconstruction;
        }
        Ok(sum / data.len().max(1) as f64)
    }

    /// MALE and MAJE of the generator on `data` with `k̂ = μ`.
    pub fn validate(&self, data: &[TrainSample]) -> Result<Validation> {
        validate(&self.model, &self.nets, data)
    }
}

/// MALE and MAJE of `model` on `data` with `k̂ = μ`, in millimetres.
pub fn validate(model: &SynthesisModel, nets: &Networks, data: &[TrainSample]) -> Result<Validation> {
    if data.is_empty() {
        return Err(Error::EmptySplit("validation".into()));
    }
    let sk = &model.spec.pose.skeleton;
    let zeros = vec![0.0; model.spec.plan.d_k];
    let (mut gf, mut sf, mut gp, mut sp) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for s in data {
        let (face, units) = model.synthesize(nets, &model.input(s, s.speaker, zeros.clone()))?;
        gf.push(to_points(&s.face_deltas));
        sf.push(to_points(&face));
        gp.push(joints(&s.pose_units, sk)?);
        sp.push(joints(&units, sk)?);
    }
    Ok(Validation {
        male: male(&gf, &sf)?,
        maje: maje(&gp, &sp)?,
    })
}

fn joints(units: &Tensor, sk: &crate::motion::Skeleton) -> Result<PointSeq> {
    let u = crate::motion::PoseUnitSequence {
        vectors: to_points(units),
    };
    Ok(crate::motion::units_to_pose(&u, sk)?.positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(spec: &NetworkSpec, n: usize, seed: u64) -> Vec<TrainSample> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (t, l, b) = (spec.frames, spec.landmarks(), spec.bones());
        (0..n)
            .map(|i| {
                let phase = r.random_range(0.0..6.0);
                let face = (0..t * l * 3)
                    .map(|k| 5.0 * ((k / (l * 3)) as f64 * 0.3 + phase + (k % (l * 3)) as f64).sin())
                    .collect();
                let mut units = Vec::with_capacity(t * b * 3);
                for f in 0..t {
                    for j in 0..b {
                        let a = 0.4 * (f as f64 * 0.2 + phase + j as f64).sin();
                        units.extend([a.sin(), a.cos(), 0.0]);
                    }
                }
                TrainSample {
                    speaker: i % spec.speakers,
                    mfcc: Tensor::new(
                        vec![t, spec.mfcc_dim],
                        (0..t * spec.mfcc_dim).map(|_| r.random_range(-1.0..1.0)).collect(),
                    ),
                    word_rows: (0..t).map(|f| (f / 7) % spec.vocabulary.rows()).collect(),
                    face_deltas: Tensor::new(vec![t, l, 3], face),
                    pose_units: Tensor::new(vec![t, b, 3], units),
                }
            })
            .collect()
    }

    fn trainer(weights: LossWeights, seed: u64) -> (Trainer, Vec<TrainSample>) {
        let spec = NetworkSpec::miniature();
        let data = corpus(&spec, 4, seed);
        let model = SynthesisModel::new(spec, &data, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let t = Trainer::new(model, weights, OptimizerConfig::default(), seed).unwrap();
        (t, data)
    }

    #[test]
    fn zero_lr_steps_leave_generator_bitwise() {
        let (mut t, data) = trainer(LossWeights::default(), 1);
        t.generator_lr = 0.0;
        t.discriminator_lr = 0.0;
        let (g, d) = (t.model.generator.fingerprint(), t.model.discriminator.fingerprint());
        let batch: Vec<&TrainSample> = data.iter().collect();
        t.train_step(&batch).unwrap();
        t.train_step(&batch).unwrap();
        assert_eq!(t.model.generator.fingerprint(), g);
        assert_eq!(t.model.discriminator.fingerprint(), d);
    }

    #[test]
    fn reconstruction_descends_for_small_lr() {
        let w = LossWeights {
            lambda_csd: 0.0,
            lambda_adv: 0.0,
            ..Default::default()
        };
        for lr in [1e-4, 1e-5, 1e-6] {
            let (mut t, data) = trainer(w.clone(), 2);
            t.sample_noise = false;
            t.generator_lr = lr;
            let before = t.reconstruction_loss(&data).unwrap();
            let batch: Vec<&TrainSample> = data.iter().collect();
            t.train_step(&batch).unwrap();
            let after = t.reconstruction_loss(&data).unwrap();
            assert!(after < before, "lr {lr}: {after} !< {before}");
        }
    }

    #[test]
    fn discriminator_update_never_touches_generator() {
        let (mut t, data) = trainer(LossWeights::default(), 3);
        t.generator_lr = 0.0;
        let g = t.model.generator.fingerprint();
        let d = t.model.discriminator.fingerprint();
        let batch: Vec<&TrainSample> = data.iter().collect();
        let l = t.train_step(&batch).unwrap();
        assert!(l.discriminator > 0.0 && l.adversarial > 0.0 && l.csd >= 0.0);
        assert_eq!(t.model.generator.fingerprint(), g);
        assert_ne!(t.model.discriminator.fingerprint(), d);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let (mut a, data) = trainer(LossWeights::default(), 4);
        a.opt.batch_size = 2;
        let mut b = Trainer::from_state(a.state()).unwrap();
        let json = serde_json::to_string(&b.state()).unwrap();
        b = Trainer::from_state(serde_json::from_str(&json).unwrap()).unwrap();
        let la = a.run_epoch(&data).unwrap();
        let lb = b.run_epoch(&data).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.state(), b.state());
        assert_eq!(a.generator_lr, 1e-4 * 0.999);
    }

    #[test]
    fn validation_is_zero_only_for_perfect_output() {
        let (t, data) = trainer(LossWeights::default(), 5);
        let v = t.validate(&data).unwrap();
        assert!(v.male > 0.0 && v.maje > 0.0);
        assert_eq!(t.validate(&[]).err(), Some(Error::EmptySplit("validation".into())));
    }
}
