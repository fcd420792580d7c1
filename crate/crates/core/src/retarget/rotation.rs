use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{PointSeq, PoseJointSequence, Skeleton};

/// Per-frame local joint rotations as `[w, x, y, z]`. The rotation stored at
/// joint `j > 0` turns the rest direction of the bone ending at `j`, expressed
/// in its parent's frame; joint 0 carries the world-frame root rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRotationSequence {
    pub joints: usize,
    /// `T × J` quaternions, frame-major.
    pub rotations: Vec<[f64; 4]>,
    /// `(frame, joint)` pairs whose bone was antiparallel to its rest direction.
    pub ambiguous: Vec<(usize, usize)>,
}

impl JointRotationSequence {
    pub fn frames(&self) -> usize {
        if self.joints == 0 {
            0
        } else {
            self.rotations.len() / self.joints
        }
    }

    pub fn get(&self, t: usize, j: usize) -> [f64; 4] {
        self.rotations[t * self.joints + j]
    }

    /// Fails on the first antiparallel bone.
    pub fn require_unambiguous(&self) -> Result<()> {
        match self.ambiguous.first() {
            Some(&(frame, joint)) => Err(Error::AmbiguousTwist { frame, joint }),
            None => Ok(()),
        }
    }
}

fn quat(q: &UnitQuaternion<f64>) -> [f64; 4] {
    let q = q.quaternion();
    let s = if q.w < 0.0 { -1.0 } else { 1.0 };
    [s * q.w, s * q.i, s * q.j, s * q.k]
}

fn unquat(q: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]))
}

/// Shortest arc from `from` to `to` (both unit). Antiparallel inputs turn
/// 180° about the axis perpendicular to `from` closest to its smallest
/// component; the flag reports that case.
pub fn shortest_arc(from: Vector3<f64>, to: Vector3<f64>) -> (UnitQuaternion<f64>, bool) {
    if from.dot(&to) < -1.0 + 1e-12 {
        let k = from.iamin();
        let axis = from.cross(&Vector3::ith(k, 1.0));
        return (
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), std::f64::consts::PI),
            true,
        );
    }
    (
        UnitQuaternion::rotation_between(&from, &to).unwrap_or_else(UnitQuaternion::identity),
        false,
    )
}

pub fn positions_to_rotations(pose: &PoseJointSequence, skel: &Skeleton) -> Result<JointRotationSequence> {
    let p = &pose.positions;
    let nj = skel.joints();
    if p.points() != nj {
        return Err(Error::shape(format!(
            "pose has {} joints, skeleton has {nj}",
            p.points()
        )));
    }
    let rest: Vec<Vector3<f64>> = skel
        .rest_directions
        .iter()
        .map(|r| Vector3::from(*r).normalize())
        .collect();
    let mut rotations = Vec::with_capacity(p.frames() * nj);
    let mut ambiguous = Vec::new();
    let mut global = vec![UnitQuaternion::identity(); nj];
    for t in 0..p.frames() {
        rotations.push([1.0, 0.0, 0.0, 0.0]);
        for j in 1..nj {
            let parent = skel.parents[j].expect("non-root");
            let v = Vector3::from(p.point(t, j)) - Vector3::from(p.point(t, parent));
            let n = v.norm();
            if !(n > 1e-9) {
                return Err(Error::ZeroBone { frame: t, bone: j - 1 });
            }
            let (g, flip) = shortest_arc(rest[j - 1], v / n);
            if flip {
                ambiguous.push((t, j));
            }
            global[j] = g;
            rotations.push(quat(&(global[parent].inverse() * g)));
        }
    }
    Ok(JointRotationSequence {
        joints: nj,
        rotations,
        ambiguous,
    })
}

/// Forward kinematics: compose local rotations down the tree and lay each
/// bone along its rotated rest direction. The root sits at the origin.
pub fn rotations_to_positions(rot: &JointRotationSequence, skel: &Skeleton) -> Result<PoseJointSequence> {
    let nj = skel.joints();
    if rot.joints != nj || rot.rotations.len() % nj != 0 {
        return Err(Error::shape(format!(
            "rotations for {} joints, skeleton has {nj}",
            rot.joints
        )));
    }
    let mut out = PointSeq::zeros(rot.frames(), nj);
    let mut global = vec![UnitQuaternion::identity(); nj];
    for t in 0..rot.frames() {
        global[0] = unquat(rot.get(t, 0));
        for j in 1..nj {
            let parent = skel.parents[j].expect("non-root");
            global[j] = global[parent] * unquat(rot.get(t, j));
            let d = global[j] * Vector3::from(skel.rest_directions[j - 1]).normalize();
            let base = out.point(t, parent);
            let len = skel.bone_lengths[j - 1];
            out.set_point(t, j, [base[0] + len * d.x, base[1] + len * d.y, base[2] + len * d.z]);
        }
    }
    Ok(PoseJointSequence { positions: out })
}
