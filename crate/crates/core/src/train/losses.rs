//! Loss functions on the tape. Every motion tensor has time as its first
//! axis; `‖·‖₁` is the mean absolute value over one frame's entries, summed
//! over frames.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_vel: f64,
    pub lambda_acc: f64,
    pub lambda_csd: f64,
    pub lambda_adv: f64,
    pub csd_margin: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_vel: 0.1,
            lambda_acc: 0.1,
            lambda_csd: 0.1,
            lambda_adv: 1.0,
            csd_margin: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_vel, self.lambda_acc, self.lambda_csd, self.lambda_adv];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !self.csd_margin.is_finite() {
            return Err(Error::InvalidConfig(
                "loss weights must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn same_shape(tape: &Tape, a: Var, b: Var) -> Result<()> {
    let (sa, sb) = (tape.shape(a), tape.shape(b));
    if sa != sb || sa.is_empty() {
        return Err(Error::shape(format!("loss operands {sa:?} and {sb:?}")));
    }
    Ok(())
}

/// `Σ_t mean |a_t − b_t|`.
pub fn frame_l1(tape: &mut Tape, a: Var, b: Var) -> Result<Var> {
    same_shape(tape, a, b)?;
    let shape = tape.shape(a);
    let per_frame = shape[1..].iter().product::<usize>().max(1);
    let d = tape.sub(a, b);
    let ad = tape.abs(d);
    let s = tape.sum(ad);
    Ok(tape.scale(s, 1.0 / per_frame as f64))
}

/// Forward difference along time with `Δ₀ = 0`.
pub fn forward_diff(tape: &mut Tape, x: Var) -> Var {
    let shape = tape.shape(x).to_vec();
    let per = shape[1..].iter().product::<usize>();
    let idx: Arc<[Option<usize>]> = (0..shape[0])
        .flat_map(|t| {
            let src = t.saturating_sub(1);
            (0..per).map(move |i| Some(src * per + i))
        })
        .collect();
    let prev = tape.gather(x, idx, shape);
    tape.sub(x, prev)
}

/// Lip loss: positions plus velocities.
pub fn phoneme_loss(tape: &mut Tape, gt: Var, syn: Var) -> Result<Var> {
    let pos = frame_l1(tape, gt, syn)?;
    let dg = forward_diff(tape, gt);
    let ds = forward_diff(tape, syn);
    let vel = frame_l1(tape, dg, ds)?;
    Ok(tape.add(pos, vel))
}

/// Operands of the reconstruction loss: positions (`face`, `pose`) and
/// representation vectors (`face_deltas`, `pose_units`).
#[derive(Clone, Copy, Debug)]
pub struct MotionVars {
    pub face: Var,
    pub face_deltas: Var,
    pub pose: Var,
    pub pose_units: Var,
}

/// Position terms, `λ_vel` on the face deltas and bone units, `λ_acc` on
/// their forward differences.
pub fn reconstruction_loss(tape: &mut Tape, gt: &MotionVars, syn: &MotionVars, w: &LossWeights) -> Result<Var> {
    let face = frame_l1(tape, gt.face, syn.face)?;
    let pose = frame_l1(tape, gt.pose, syn.pose)?;
    let mut total = tape.add(face, pose);

    let fd = frame_l1(tape, gt.face_deltas, syn.face_deltas)?;
    let ud = frame_l1(tape, gt.pose_units, syn.pose_units)?;
    let vel = tape.add(fd, ud);
    let vel = tape.scale(vel, w.lambda_vel);
    total = tape.add(total, vel);

    let (gf, sf) = (forward_diff(tape, gt.face_deltas), forward_diff(tape, syn.face_deltas));
    let (gu, su) = (forward_diff(tape, gt.pose_units), forward_diff(tape, syn.pose_units));
    let af = frame_l1(tape, gf, sf)?;
    let au = frame_l1(tape, gu, su)?;
    let acc = tape.add(af, au);
    let acc = tape.scale(acc, w.lambda_acc);
    Ok(tape.add(total, acc))
}

/// Mean absolute difference over the concatenated face and pose entries.
pub fn motion_distance(tape: &mut Tape, gt_face: Var, gt_pose: Var, face: Var, pose: Var) -> Result<Var> {
    same_shape(tape, gt_face, face)?;
    same_shape(tape, gt_pose, pose)?;
    let n = (tape.value(face).len() + tape.value(pose).len()) as f64;
    let df = tape.sub(gt_face, face);
    let df = tape.abs(df);
    let sf = tape.sum(df);
    let dp = tape.sub(gt_pose, pose);
    let dp = tape.abs(dp);
    let sp = tape.sum(dp);
    let s = tape.add(sf, sp);
    Ok(tape.scale(s, 1.0 / n))
}

/// `max(0, x)` as `(x + |x|) / 2`.
fn hinge(tape: &mut Tape, x: Var) -> Var {
    let a = tape.abs(x);
    let s = tape.add(x, a);
    tape.scale(s, 0.5)
}

/// Cross-speaker ranking hinge `max(0, margin + d_same − d_other)`.
pub fn csd_loss(tape: &mut Tape, d_same: Var, d_other: Var, margin: f64) -> Var {
    let diff = tape.sub(d_same, d_other);
    let m = tape.constant(Tensor::new(
        tape.shape(diff).to_vec(),
        vec![margin; tape.value(diff).len()],
    ));
    let x = tape.add(diff, m);
    hinge(tape, x)
}

/// Picks a speaker different from `speaker`; errors when they coincide.
pub fn check_distinct_speakers(speaker: usize, other: usize) -> Result<()> {
    if speaker == other {
        return Err(Error::SameSpeaker(speaker));
    }
    Ok(())
}

fn check_probability(tape: &Tape, c: Var) -> Result<()> {
    for &v in &tape.value(c).data {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::DomainError(v));
        }
    }
    Ok(())
}

/// Non-saturating generator loss `−log c_sn`.
pub fn generator_adversarial_loss(tape: &mut Tape, c_sn: Var) -> Result<Var> {
    check_probability(tape, c_sn)?;
    let l = tape.log(c_sn);
    let s = tape.sum(l);
    let n = tape.value(c_sn).len() as f64;
    Ok(tape.scale(s, -1.0 / n))
}

/// `−log c_gt − log(1 − c_sn)`, averaged over samples.
pub fn discriminator_loss(tape: &mut Tape, c_gt: Var, c_sn: Var) -> Result<Var> {
    check_probability(tape, c_gt)?;
    check_probability(tape, c_sn)?;
    let lg = tape.log(c_gt);
    let one = tape.constant(Tensor::new(
        tape.shape(c_sn).to_vec(),
        vec![1.0; tape.value(c_sn).len()],
    ));
    let inv = tape.sub(one, c_sn);
    let ls = tape.log(inv);
    let s = tape.add(lg, ls);
    let s = tape.sum(s);
    let n = tape.value(c_sn).len() as f64;
    Ok(tape.scale(s, -1.0 / n))
}

/// `−log σ(z) = softplus(−z)`; the generator loss from a logit.
pub fn generator_adversarial_loss_logit(tape: &mut Tape, z_sn: Var) -> Var {
    let nz = tape.scale(z_sn, -1.0);
    let sp = tape.softplus(nz);
    tape.sum(sp)
}

/// `softplus(−z_gt) + softplus(z_sn)`; the discriminator loss from logits.
pub fn discriminator_loss_logit(tape: &mut Tape, z_gt: Var, z_sn: Var) -> Var {
    let nz = tape.scale(z_gt, -1.0);
    let a = tape.softplus(nz);
    let b = tape.softplus(z_sn);
    let s = tape.add(a, b);
    tape.sum(s)
}

/// Evaluates a loss built on a fresh tape from constant tensors.
pub fn evaluate(inputs: &[&Tensor], f: impl FnOnce(&mut Tape, &[Var]) -> Result<Var>) -> Result<f64> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant((*t).clone())).collect();
    let l = f(&mut tape, &vars)?;
    Ok(tape.scalar(l))
}
