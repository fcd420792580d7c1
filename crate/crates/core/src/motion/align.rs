use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::types::{FaceLandmarkSequence, PointSeq};
use crate::error::{Error, Result};

/// Proper rigid motion `p ↦ R·p + t` (millimetres).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let q = self.rotation * Vector3::from(p) + self.translation;
        [q.x, q.y, q.z]
    }

    /// True when `R·Rᵀ = I` and `det R = 1` within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let orth = (r * r.transpose() - Matrix3::identity()).abs().max();
        orth <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

/// Least-squares rigid transform (no scale) taking `source` onto `target`,
/// with the determinant correction that excludes reflections.
pub fn umeyama_fit(source: &[[f64; 3]], target: &[[f64; 3]]) -> Result<RigidTransform> {
    if source.len() != target.len() {
        return Err(Error::shape(format!(
            "{} source points vs {} target points",
            source.len(),
            target.len()
        )));
    }
    let n = source.len();
    if n < 3 {
        return Err(Error::DegenerateConfiguration {
            rank: n.saturating_sub(1),
        });
    }
    let inv_n = 1.0 / n as f64;
    let mu_s = source.iter().fold(Vector3::zeros(), |a, p| a + Vector3::from(*p)) * inv_n;
    let mu_t = target.iter().fold(Vector3::zeros(), |a, p| a + Vector3::from(*p)) * inv_n;

    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let cs = Vector3::from(*s) - mu_s;
        let ct = Vector3::from(*t) - mu_t;
        cov += ct * cs.transpose();
        src_cov += cs * cs.transpose();
    }
    cov *= inv_n;
    src_cov *= inv_n;

    let sv = src_cov.symmetric_eigenvalues();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&v| v > 1e-12 * smax.max(f64::MIN_POSITIVE)).count();
    if smax <= 0.0 || rank < 2 {
        return Err(Error::DegenerateConfiguration {
            rank: if smax <= 0.0 { 0 } else { rank },
        });
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut s = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rotation = u * s * v_t;
    let translation = mu_t - rotation * mu_s;
    Ok(RigidTransform { rotation, translation })
}

/// Rigidly map every frame onto `reference_frame` (left bit-identical).
pub fn view_normalize(seq: &FaceLandmarkSequence, reference_frame: usize) -> Result<FaceLandmarkSequence> {
    let frames = seq.frames();
    if reference_frame >= frames {
        return Err(Error::TooShort {
            needed: reference_frame + 1,
            got: frames,
        });
    }
    let pos = &seq.positions;
    let reference = pos.frame_points(reference_frame);
    let mut out = PointSeq::zeros(frames, pos.points());
    for t in 0..frames {
        if t == reference_frame {
            out.frame_mut(t).copy_from_slice(pos.frame(t));
            continue;
        }
        let pts = pos.frame_points(t);
        let xf = umeyama_fit(&pts, &reference).map_err(|e| e.at_frame(t))?;
        for (i, p) in pts.iter().enumerate() {
            out.set_point(t, i, xf.apply(*p));
        }
    }
    FaceLandmarkSequence::new(out, seq.frame_rate)
}
