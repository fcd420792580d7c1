use rand::Rng;

use super::generator::{EncoderNames, MotionEncoder};
use super::layers::Linear;
use super::params::{Bind, ParamSet};
use super::NetworkSpec;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;

/// Full-length face and pose encoders of its own, a per-frame classifier
/// layer, mean pooling over time and a sigmoid output.
#[derive(Clone, Debug)]
pub struct Discriminator {
    pub face: MotionEncoder,
    pub pose: MotionEncoder,
    head: Linear,
    out: Linear,
}

impl Discriminator {
    pub fn new(spec: &NetworkSpec) -> Self {
        let p = &spec.plan;
        let a = &spec.arch;
        let t = spec.frames;
        Self {
            face: MotionEncoder::new(
                EncoderNames {
                    node: "disc/stgcn_f",
                    component: "disc/stgcn_l",
                    conv: "disc/conv_l",
                },
                &spec.face_graph,
                &spec.face_anatomy,
                &spec.face_collation(),
                p.d_f,
                p.d_l,
                p.d_l_tilde,
                t,
                t,
                a.graph_depth,
                a.conv_kernel,
            ),
            pose: MotionEncoder::new(
                EncoderNames {
                    node: "disc/stgcn_u",
                    component: "disc/stgcn_v",
                    conv: "disc/conv_v",
                },
                &spec.pose_graph,
                &spec.pose_anatomy,
                &spec.pose_collation(),
                p.d_u,
                p.d_v,
                p.d_v_tilde,
                t,
                t,
                a.graph_depth,
                a.conv_kernel,
            ),
            head: Linear::new("disc/fc0", p.d_l_tilde + p.d_v_tilde, a.discriminator_hidden),
            out: Linear::new("disc/fc1", a.discriminator_hidden, 1),
        }
    }

    pub fn init(&self, rng: &mut impl Rng) -> ParamSet {
        let mut ps = ParamSet::new();
        self.face.init(&mut ps, rng);
        self.pose.init(&mut ps, rng);
        self.head.init(&mut ps, rng);
        self.out.init(&mut ps, rng);
        ps
    }

    /// Probability that `(face [T, L, 3], pose [T, J − 1, 3])` is real, as a scalar.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, face: Var, pose: Var) -> Result<Var> {
        let logit = self.logit(tape, b, face, pose)?;
        Ok(tape.sigmoid(logit))
    }

    /// The pre-sigmoid score, for numerically stable log-probabilities.
    pub fn logit(&self, tape: &mut Tape, b: &mut Bind, face: Var, pose: Var) -> Result<Var> {
        let l = self.face.forward(tape, b, face)?;
        let v = self.pose.forward(tape, b, pose)?;
        let e = tape.concat(&[l, v]);
        let h = self.head.forward_act(tape, b, e);
        let pooled = tape.mean_rows(h);
        let logit = self.out.forward(tape, b, pooled);
        Ok(tape.reshape(logit, vec![]))
    }

    pub fn run(&self, params: &ParamSet, face: &Tensor, pose: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let mut b = Bind::frozen(params);
        let f = tape.constant(face.clone());
        let p = tape.constant(pose.clone());
        let c = self.forward(&mut tape, &mut b, f, p)?;
        Ok(tape.scalar(c))
    }
}
