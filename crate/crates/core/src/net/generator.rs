use std::sync::Arc;

use rand::Rng;

use super::layers::{Linear, Stgcn, TemporalConv, TimeMap};
use super::params::{Bind, ParamSet};
use super::NetworkSpec;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graphs::{AcGraph, CollationPlan};

/// Floor added to the speaker variance so it stays strictly positive.
const MIN_VARIANCE: f64 = 1e-6;

fn leaky(tape: &mut Tape, x: Var) -> Var {
    tape.leaky_relu(x, super::layers::LEAKY_SLOPE)
}

/// Two temporal convolutions over MFCC frames: `[T, M] → [T, D_a]`.
#[derive(Clone, Debug)]
pub struct MfccEncoder {
    c1: TemporalConv,
    c2: TemporalConv,
}

impl MfccEncoder {
    pub fn new(m: usize, d_a: usize, kernel: usize) -> Self {
        Self {
            c1: TemporalConv::new("mfcc/0", kernel, m, d_a),
            c2: TemporalConv::new("mfcc/1", kernel, d_a, d_a),
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        self.c1.init(ps, rng);
        self.c2.init(ps, rng);
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, mfcc: Var) -> Var {
        let h = self.c1.forward_seq(tape, b, mfcc);
        let h = leaky(tape, h);
        self.c2.forward_seq(tape, b, h)
    }
}

/// Per-frame word embedding lookup followed by two temporal convolutions.
#[derive(Clone, Debug)]
pub struct TextEncoder {
    rows: usize,
    dim: usize,
    c1: TemporalConv,
    c2: TemporalConv,
}

impl TextEncoder {
    pub fn new(rows: usize, d_w: usize, kernel: usize) -> Self {
        Self {
            rows,
            dim: d_w,
            c1: TemporalConv::new("text/0", kernel, d_w, d_w),
            c2: TemporalConv::new("text/1", kernel, d_w, d_w),
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        let n = self.rows * self.dim;
        let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ps.insert("text/embed", Tensor::new(vec![self.rows, self.dim], data));
        self.c1.init(ps, rng);
        self.c2.init(ps, rng);
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, rows: &[usize]) -> Result<Var> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::shape(format!("word row {r} outside a table of {}", self.rows)));
        }
        let table = b.var(tape, "text/embed");
        let d = self.dim;
        let idx: Arc<[Option<usize>]> = rows
            .iter()
            .flat_map(|&r| (0..d).map(move |c| Some(r * d + c)))
            .collect();
        let emb = tape.gather(table, idx, vec![rows.len(), d]);
        let h = self.c1.forward_seq(tape, b, emb);
        let h = leaky(tape, h);
        Ok(self.c2.forward_seq(tape, b, h))
    }
}

/// Speaker one-hot to a diagonal Gaussian and a reparameterized sample.
#[derive(Clone, Debug)]
pub struct SpeakerEncoder {
    mu: Linear,
    sigma: Linear,
    pub speakers: usize,
    pub dim: usize,
}

pub struct SpeakerCode {
    pub mu: Var,
    pub sigma: Var,
    pub sample: Var,
}

impl SpeakerEncoder {
    pub fn new(speakers: usize, d_k: usize) -> Self {
        Self {
            mu: Linear::new("speaker/mu", speakers, d_k),
            sigma: Linear::new("speaker/sigma", speakers, d_k),
            speakers,
            dim: d_k,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        self.mu.init(ps, rng);
        self.sigma.init(ps, rng);
    }

    /// `k̂ = μ + √Σ ⊙ noise`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, one_hot: &[f64], noise: &[f64]) -> Result<SpeakerCode> {
        check_one_hot(one_hot, self.speakers)?;
        if noise.len() != self.dim {
            return Err(Error::shape(format!(
                "noise has {} entries, expected {}",
                noise.len(),
                self.dim
            )));
        }
        let k = tape.constant(Tensor::new(vec![self.speakers], one_hot.to_vec()));
        let mu = self.mu.forward(tape, b, k);
        let raw = self.sigma.forward(tape, b, k);
        let sp = tape.softplus(raw);
        let floor = tape.constant(Tensor::new(vec![self.dim], vec![MIN_VARIANCE; self.dim]));
        let sigma = tape.add(sp, floor);
        let sd = tape.sqrt(sigma);
        let z = tape.constant(Tensor::new(vec![self.dim], noise.to_vec()));
        let scaled = tape.mul(sd, z);
        let sample = tape.add(mu, scaled);
        Ok(SpeakerCode { mu, sigma, sample })
    }
}

pub(crate) fn check_one_hot(k: &[f64], speakers: usize) -> Result<()> {
    if k.len() != speakers {
        return Err(Error::shape(format!(
            "speaker vector has {} entries, expected {speakers}",
            k.len()
        )));
    }
    let ones = k.iter().filter(|&&v| v == 1.0).count();
    let zeros = k.iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || ones + zeros != k.len() {
        return Err(Error::NotOneHot);
    }
    Ok(())
}

/// Hierarchical motion encoder: node-level graph network, collation into
/// anatomical components, component-level graph network, flatten, per-frame
/// spatial map, then a temporal map to the output length.
#[derive(Clone, Debug)]
pub struct MotionEncoder {
    nodes: usize,
    node_dim: usize,
    collation: Arc<[Option<usize>]>,
    components: usize,
    comp_dim: usize,
    node_net: Stgcn,
    comp_net: Stgcn,
    spatial: Linear,
    time: TimeMap,
    pub t_in: usize,
    pub t_out: usize,
    pub out_dim: usize,
}

/// Parameter name prefixes of one [`MotionEncoder`].
#[derive(Clone, Copy, Debug)]
pub struct EncoderNames<'a> {
    pub node: &'a str,
    pub component: &'a str,
    pub conv: &'a str,
}

impl MotionEncoder {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        names: EncoderNames,
        node_graph: &AcGraph,
        comp_graph: &AcGraph,
        plan: &CollationPlan,
        node_dim: usize,
        comp_dim: usize,
        out_dim: usize,
        t_in: usize,
        t_out: usize,
        depth: usize,
        kernel: usize,
    ) -> Self {
        assert_eq!(
            plan.node_count(),
            node_graph.node_count,
            "collation must cover the node graph"
        );
        assert_eq!(
            plan.component_count(),
            comp_graph.node_count,
            "one component node per group"
        );
        let components = plan.component_count();
        Self {
            nodes: node_graph.node_count,
            node_dim,
            collation: plan.gather_index(node_dim).into(),
            components,
            comp_dim,
            node_net: Stgcn::new(names.node, node_graph, 3, node_dim, depth),
            comp_net: Stgcn::new(names.component, comp_graph, plan.pad_to * node_dim, comp_dim, depth),
            spatial: Linear::new(format!("{}/s", names.conv), components * comp_dim, out_dim),
            time: TimeMap::new(&format!("{}/t", names.conv), t_in, t_out, out_dim, kernel),
            t_in,
            t_out,
            out_dim,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        self.node_net.init(ps, rng);
        self.comp_net.init(ps, rng);
        self.spatial.init(ps, rng);
        self.time.init(ps, rng);
    }

    pub fn check_input(&self, shape: &[usize]) -> Result<()> {
        if shape != [self.t_in, self.nodes, 3] {
            return Err(Error::shape(format!(
                "motion input {shape:?}, expected [{}, {}, 3]",
                self.t_in, self.nodes
            )));
        }
        Ok(())
    }

    /// `[t_in, N, 3] → [t_out, out_dim]`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Result<Var> {
        self.check_input(tape.shape(x))?;
        let t = self.t_in;
        let h = self.node_net.forward(tape, b, x);
        let per = self.nodes * self.node_dim;
        let idx: Arc<[Option<usize>]> = (0..t)
            .flat_map(|f| self.collation.iter().map(move |i| i.map(|i| f * per + i)))
            .collect();
        let width = self.collation.len() / self.components;
        let collated = tape.gather(h, idx, vec![t, self.components, width]);
        let g = self.comp_net.forward(tape, b, collated);
        let flat = tape.reshape(g, vec![t, self.components * self.comp_dim]);
        let s = self.spatial.forward_act(tape, b, flat);
        Ok(self.time.forward(tape, b, s))
    }
}

/// Temporal convolution, per-frame spatial map, then two fully connected
/// layers to `nodes × 3` values per frame.
#[derive(Clone, Debug)]
pub struct Decoder {
    conv_t: TemporalConv,
    conv_s: Linear,
    fc1: Linear,
    fc2: Linear,
    pub nodes: usize,
}

impl Decoder {
    pub fn new(name: &str, h: usize, hidden: usize, nodes: usize, kernel: usize) -> Self {
        Self {
            conv_t: TemporalConv::new(format!("{name}/t"), kernel, h, hidden),
            conv_s: Linear::new(format!("{name}/s"), hidden, hidden),
            fc1: Linear::new(format!("{name}/fc0"), hidden, hidden),
            fc2: Linear::new(format!("{name}/fc1"), hidden, nodes * 3),
            nodes,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        self.conv_t.init(ps, rng);
        self.conv_s.init(ps, rng);
        self.fc1.init(ps, rng);
        self.fc2.init(ps, rng);
    }

    /// `[T, H] → [T, nodes, 3]`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, e: Var) -> Result<Var> {
        let shape = tape.shape(e).to_vec();
        if shape.len() != 2 || shape[1] != self.conv_t.cin {
            return Err(Error::shape(format!(
                "embedding {shape:?}, expected [T, {}]",
                self.conv_t.cin
            )));
        }
        let h = self.conv_t.forward_seq(tape, b, e);
        let h = leaky(tape, h);
        let h = self.conv_s.forward_act(tape, b, h);
        let h = self.fc1.forward_act(tape, b, h);
        let out = self.fc2.forward(tape, b, h);
        Ok(tape.reshape(out, vec![shape[0], self.nodes, 3]))
    }
}

/// Channel-wise concatenation `(â, ŵ, k̂, l̂, v̂)`; `k̂` is repeated over time.
pub fn fuse(tape: &mut Tape, a: Var, w: Var, k: Var, l: Var, v: Var) -> Result<Var> {
    let t = tape.shape(a).first().copied().unwrap_or(0);
    for (name, x) in [("audio", a), ("text", w), ("face", l), ("pose", v)] {
        let s = tape.shape(x);
        if s.len() != 2 || s[0] != t {
            return Err(Error::shape(format!("{name} embedding {s:?} does not span {t} frames")));
        }
    }
    let ks = tape.shape(k).to_vec();
    if ks.len() != 1 {
        return Err(Error::shape(format!("speaker embedding {ks:?} must be a vector")));
    }
    let d = ks[0];
    let idx: Arc<[Option<usize>]> = (0..t).flat_map(|_| (0..d).map(Some)).collect();
    let kr = tape.gather(k, idx, vec![t, d]);
    Ok(tape.concat(&[a, w, kr, l, v]))
}

/// Inputs for one generator pass; all motion in network units.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorInput {
    /// `[T, M]`, normalized.
    pub mfcc: Tensor,
    /// Embedding row per frame.
    pub word_rows: Vec<usize>,
    pub speaker: Vec<f64>,
    /// Standard normal draw of width `D_k`; zeros give `k̂ = μ`.
    pub noise: Vec<f64>,
    /// `[T_s, L, 3]` face deltas.
    pub face_seed: Tensor,
    /// `[T_s, J − 1, 3]` bone unit vectors.
    pub pose_seed: Tensor,
}

/// Every intermediate of a generator pass.
#[derive(Clone, Debug)]
pub struct GeneratorOutput {
    pub audio: Var,
    pub text: Var,
    pub speaker_mu: Var,
    pub speaker_sigma: Var,
    pub speaker: Var,
    pub face_latent: Var,
    pub pose_latent: Var,
    pub fused: Var,
    /// `[T, L, 3]` face deltas.
    pub face: Var,
    /// Raw pose decoder output before normalization.
    pub pose_raw: Var,
    /// `[T, J − 1, 3]` unit bone vectors.
    pub pose: Var,
    /// Flat `(frame · bones + bone)` rows that fell back to the seed direction.
    pub fallback_rows: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub frames: usize,
    pub seed_frames: usize,
    pub landmarks: usize,
    pub bones: usize,
    pub mfcc_dim: usize,
    pub mfcc: MfccEncoder,
    pub text: TextEncoder,
    pub speaker: SpeakerEncoder,
    pub face: MotionEncoder,
    pub pose: MotionEncoder,
    pub face_decoder: Decoder,
    pub pose_decoder: Decoder,
}

impl Generator {
    pub fn new(spec: &NetworkSpec) -> Self {
        Self::with_graphs(
            spec,
            &spec.face_graph,
            &spec.face_collation(),
            &spec.pose_graph,
            &spec.pose_collation(),
        )
    }

    /// Same architecture on explicitly supplied graphs and collation plans.
    pub fn with_graphs(
        spec: &NetworkSpec,
        face_graph: &AcGraph,
        face_plan: &CollationPlan,
        pose_graph: &AcGraph,
        pose_plan: &CollationPlan,
    ) -> Self {
        let p = &spec.plan;
        let a = &spec.arch;
        let (t, ts) = (spec.frames, spec.seed_frames);
        Self {
            frames: t,
            seed_frames: ts,
            landmarks: spec.landmarks(),
            bones: spec.bones(),
            mfcc_dim: spec.mfcc_dim,
            mfcc: MfccEncoder::new(spec.mfcc_dim, p.d_a, a.conv_kernel),
            text: TextEncoder::new(spec.vocabulary.rows(), p.d_w, a.conv_kernel),
            speaker: SpeakerEncoder::new(spec.speakers, p.d_k),
            face: MotionEncoder::new(
                EncoderNames {
                    node: "stgcn_f",
                    component: "stgcn_l",
                    conv: "conv_l",
                },
                face_graph,
                &spec.face_anatomy,
                face_plan,
                p.d_f,
                p.d_l,
                p.d_l_tilde,
                ts,
                t,
                a.graph_depth,
                a.conv_kernel,
            ),
            pose: MotionEncoder::new(
                EncoderNames {
                    node: "stgcn_u",
                    component: "stgcn_v",
                    conv: "conv_v",
                },
                pose_graph,
                &spec.pose_anatomy,
                pose_plan,
                p.d_u,
                p.d_v,
                p.d_v_tilde,
                ts,
                t,
                a.graph_depth,
                a.conv_kernel,
            ),
            face_decoder: Decoder::new("dec_face", p.h, a.decoder_hidden, spec.landmarks(), a.conv_kernel),
            pose_decoder: Decoder::new("dec_pose", p.h, a.decoder_hidden, spec.bones(), a.conv_kernel),
        }
    }

    pub fn init(&self, rng: &mut impl Rng) -> ParamSet {
        let mut ps = ParamSet::new();
        self.mfcc.init(&mut ps, rng);
        self.text.init(&mut ps, rng);
        self.speaker.init(&mut ps, rng);
        self.face.init(&mut ps, rng);
        self.pose.init(&mut ps, rng);
        self.face_decoder.init(&mut ps, rng);
        self.pose_decoder.init(&mut ps, rng);
        ps
    }

    fn check(&self, input: &GeneratorInput) -> Result<()> {
        let (t, ts) = (self.frames, self.seed_frames);
        if input.mfcc.shape != [t, self.mfcc_dim] {
            return Err(Error::shape(format!(
                "mfcc {:?}, expected [{t}, {}]",
                input.mfcc.shape, self.mfcc_dim
            )));
        }
        if input.word_rows.len() != t {
            return Err(Error::shape(format!(
                "{} word rows for {t} frames",
                input.word_rows.len()
            )));
        }
        if input.face_seed.shape != [ts, self.landmarks, 3] {
            return Err(Error::shape(format!("face seed {:?}", input.face_seed.shape)));
        }
        if input.pose_seed.shape != [ts, self.bones, 3] {
            return Err(Error::shape(format!("pose seed {:?}", input.pose_seed.shape)));
        }
        Ok(())
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, input: &GeneratorInput) -> Result<GeneratorOutput> {
        self.check(input)?;
        let mfcc = tape.constant(input.mfcc.clone());
        let audio = self.mfcc.forward(tape, b, mfcc);
        let text = self.text.forward(tape, b, &input.word_rows)?;
        let code = self.speaker.forward(tape, b, &input.speaker, &input.noise)?;
        let fs = tape.constant(input.face_seed.clone());
        let face_latent = self.face.forward(tape, b, fs)?;
        let ps = tape.constant(input.pose_seed.clone());
        let pose_latent = self.pose.forward(tape, b, ps)?;
        let fused = fuse(tape, audio, text, code.sample, face_latent, pose_latent)?;
        let face = self.face_decoder.forward(tape, b, fused)?;
        let pose_raw = self.pose_decoder.forward(tape, b, fused)?;
        let last = &input.pose_seed.data[(self.seed_frames - 1) * self.bones * 3..];
        let fallback: Vec<f64> = (0..self.frames).flat_map(|_| last.iter().copied()).collect();
        let (pose, fallback_rows) = tape.normalize3(pose_raw, &fallback);
        Ok(GeneratorOutput {
            audio,
            text,
            speaker_mu: code.mu,
            speaker_sigma: code.sigma,
            speaker: code.sample,
            face_latent,
            pose_latent,
            fused,
            face,
            pose_raw,
            pose,
            fallback_rows,
        })
    }

    /// Inference: face deltas `[T, L, 3]` and unit bone vectors `[T, J − 1, 3]`.
    pub fn run(&self, params: &ParamSet, input: &GeneratorInput) -> Result<(Tensor, Tensor)> {
        let mut tape = Tape::new();
        let mut b = Bind::frozen(params);
        let out = self.forward(&mut tape, &mut b, input)?;
        Ok((tape.value(out.face).clone(), tape.value(out.pose).clone()))
    }
}
