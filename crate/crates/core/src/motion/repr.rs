use super::types::{
    norm3, sub3, FaceDeltaSequence, FaceLandmarkSequence, PointSeq, PoseJointSequence, PoseUnitSequence, ReferenceFace,
    Skeleton,
};
use crate::error::{Error, Result};

const MIN_BONE: f64 = 1e-9;

pub fn face_to_deltas(seq: &FaceLandmarkSequence, reference: &ReferenceFace) -> Result<FaceDeltaSequence> {
    let l = seq.landmarks();
    if reference.landmarks() != l {
        return Err(Error::shape(format!(
            "sequence has {l} landmarks, reference has {}",
            reference.landmarks()
        )));
    }
    let mut d = seq.positions.clone();
    for t in 0..d.frames() {
        for (i, r) in reference.positions.iter().enumerate() {
            let p = d.point(t, i);
            d.set_point(t, i, sub3(p, *r));
        }
    }
    Ok(FaceDeltaSequence { deltas: d })
}

pub fn deltas_to_face(
    deltas: &FaceDeltaSequence,
    reference: &ReferenceFace,
    frame_rate: f64,
) -> Result<FaceLandmarkSequence> {
    let l = deltas.deltas.points();
    if reference.landmarks() != l {
        return Err(Error::shape(format!(
            "deltas have {l} landmarks, reference has {}",
            reference.landmarks()
        )));
    }
    let mut p = deltas.deltas.clone();
    for t in 0..p.frames() {
        for (i, r) in reference.positions.iter().enumerate() {
            let d = p.point(t, i);
            p.set_point(t, i, [r[0] + d[0], r[1] + d[1], r[2] + d[2]]);
        }
    }
    FaceLandmarkSequence::new(p, frame_rate)
}

pub fn pose_to_units(seq: &PoseJointSequence, skel: &Skeleton) -> Result<PoseUnitSequence> {
    let pos = &seq.positions;
    if pos.points() != skel.joints() {
        return Err(Error::shape(format!(
            "pose has {} joints, skeleton has {}",
            pos.points(),
            skel.joints()
        )));
    }
    let mut out = PointSeq::zeros(pos.frames(), skel.bones());
    for t in 0..pos.frames() {
        for b in 0..skel.bones() {
            let (s, d) = skel.bone_joints(b);
            let v = sub3(pos.point(t, d), pos.point(t, s));
            let n = norm3(v);
            if !(n > MIN_BONE) {
                return Err(Error::ZeroBone { frame: t, bone: b });
            }
            out.set_point(t, b, [v[0] / n, v[1] / n, v[2] / n]);
        }
    }
    Ok(PoseUnitSequence { vectors: out })
}

/// Rebuild joints from bone directions: root at the origin, each child at
/// `parent + len · u / ‖u‖`.
pub fn units_to_pose(units: &PoseUnitSequence, skel: &Skeleton) -> Result<PoseJointSequence> {
    let u = &units.vectors;
    if u.points() != skel.bones() {
        return Err(Error::shape(format!(
            "{} bone vectors for a skeleton with {} bones",
            u.points(),
            skel.bones()
        )));
    }
    let mut out = PointSeq::zeros(u.frames(), skel.joints());
    for t in 0..u.frames() {
        for b in 0..skel.bones() {
            let (s, d) = skel.bone_joints(b);
            let v = u.point(t, b);
            let n = norm3(v);
            if !(n > 0.0) {
                return Err(Error::ZeroBone { frame: t, bone: b });
            }
            let k = skel.bone_lengths[b] / n;
            let ps = out.point(t, s);
            out.set_point(t, d, [ps[0] + k * v[0], ps[1] + k * v[1], ps[2] + k * v[2]]);
        }
    }
    Ok(PoseJointSequence { positions: out })
}

/// Axis-aligned bounding-box diagonal over the union of all points.
pub fn bbox_diagonal<'a>(samples: impl IntoIterator<Item = &'a PointSeq>) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in samples {
        for p in s.data().chunks_exact(3) {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    if lo[0] > hi[0] {
        return 0.0;
    }
    norm3([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]])
}

/// Factor that brings the union bounding box to a 1000 mm diagonal.
pub fn unit_bbox_scale(samples: &[PointSeq]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let diag = bbox_diagonal(samples);
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(Error::DegenerateExtent);
    }
    Ok(1000.0 / diag)
}

pub fn scale_points(seq: &PointSeq, factor: f64) -> PointSeq {
    let data = seq.data().iter().map(|v| v * factor).collect();
    PointSeq::new(seq.frames(), seq.points(), data).expect("same shape")
}

/// Uniformly scale all samples so their union bounding box has a 1 m diagonal.
pub fn scale_to_unit_bbox(samples: &[PointSeq]) -> Result<(Vec<PointSeq>, f64)> {
    let k = unit_bbox_scale(samples)?;
    let scaled = if k == 1.0 {
        samples.to_vec()
    } else {
        samples.iter().map(|s| scale_points(s, k)).collect()
    };
    Ok((scaled, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_skeleton() -> Skeleton {
        Skeleton::new(
            vec![None, Some(0), Some(1)],
            vec![100.0, 50.0],
            vec![[1.0, 0.0, 0.0]; 2],
        )
        .unwrap()
    }

    #[test]
    fn deltas_zero_and_offset() {
        let r = ReferenceFace {
            positions: vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
        };
        let same = PointSeq::from_frames(&[r.positions.clone(), r.positions.clone()]).unwrap();
        let s = FaceLandmarkSequence::new(same, 15.0).unwrap();
        assert!(face_to_deltas(&s, &r).unwrap().deltas.data().iter().all(|v| *v == 0.0));

        let up: Vec<_> = r.positions.iter().map(|p| [p[0], p[1], p[2] + 2.0]).collect();
        let s = FaceLandmarkSequence::new(PointSeq::from_frames(&[up]).unwrap(), 15.0).unwrap();
        let d = face_to_deltas(&s, &r).unwrap();
        assert_eq!(d.deltas.point(0, 0), [0.0, 0.0, 2.0]);
        assert_eq!(d.deltas.point(0, 1), [0.0, 0.0, 2.0]);
    }

    #[test]
    fn deltas_shape_mismatch() {
        let r = ReferenceFace {
            positions: vec![[0.0; 3]],
        };
        let s = FaceLandmarkSequence::new(PointSeq::zeros(1, 2), 15.0).unwrap();
        assert!(matches!(face_to_deltas(&s, &r), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn t_pose_units() {
        let skel = line_skeleton();
        let p = PointSeq::from_frames(&[vec![[0.0; 3], [100.0, 0.0, 0.0], [150.0, 0.0, 0.0]]]).unwrap();
        let u = pose_to_units(&PoseJointSequence { positions: p }, &skel).unwrap();
        assert_eq!(u.vectors.point(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(u.vectors.point(0, 1), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn units_along_z() {
        let skel = line_skeleton();
        let u = PointSeq::from_frames(&[vec![[0.0, 0.0, 1.0]; 2]]).unwrap();
        let p = units_to_pose(&PoseUnitSequence { vectors: u }, &skel).unwrap();
        assert_eq!(
            p.positions.frame_points(0),
            vec![[0.0; 3], [0.0, 0.0, 100.0], [0.0, 0.0, 150.0]]
        );
    }

    #[test]
    fn unnormalized_units_are_scale_invariant() {
        let skel = line_skeleton();
        let a = PointSeq::from_frames(&[vec![[0.6, 0.8, 0.0], [0.0, 0.0, 1.0]]]).unwrap();
        let b = PointSeq::from_frames(&[vec![[3.0, 4.0, 0.0], [0.0, 0.0, 5.0]]]).unwrap();
        let pa = units_to_pose(&PoseUnitSequence { vectors: a }, &skel).unwrap();
        let pb = units_to_pose(&PoseUnitSequence { vectors: b }, &skel).unwrap();
        assert!(pa.positions.max_abs_diff(&pb.positions) < 1e-12);
    }

    #[test]
    fn bone_snapping() {
        let skel = line_skeleton();
        let p = PointSeq::from_frames(&[vec![[0.0; 3], [0.0, 30.0, 0.0], [0.0, 30.0, 400.0]]]).unwrap();
        let u = pose_to_units(&PoseJointSequence { positions: p }, &skel).unwrap();
        let q = units_to_pose(&u, &skel).unwrap();
        let j1 = q.positions.point(0, 1);
        let j2 = q.positions.point(0, 2);
        assert!((norm3(j1) - 100.0).abs() < 1e-9);
        assert!((norm3(sub3(j2, j1)) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn zero_bone_error() {
        let skel = line_skeleton();
        let p = PointSeq::from_frames(&[vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]]).unwrap();
        assert!(matches!(
            pose_to_units(&PoseJointSequence { positions: p }, &skel),
            Err(Error::ZeroBone { frame: 0, bone: 1 })
        ));
    }

    #[test]
    fn bbox_scaling() {
        let cube = PointSeq::from_frames(&[vec![[0.0; 3], [2000.0 / 3f64.sqrt(); 3]]]).unwrap();
        let (_, k) = scale_to_unit_bbox(&[cube]).unwrap();
        assert!((k - 0.5).abs() < 1e-12);

        let unit = PointSeq::from_frames(&[vec![[0.0; 3], [1000.0, 0.0, 0.0]]]).unwrap();
        let (out, k) = scale_to_unit_bbox(std::slice::from_ref(&unit)).unwrap();
        assert_eq!(k, 1.0);
        assert_eq!(out[0], unit);

        let a = PointSeq::from_frames(&[vec![[0.0; 3], [100.0, 0.0, 0.0]]]).unwrap();
        let b = PointSeq::from_frames(&[vec![[400.0, 0.0, 0.0]]]).unwrap();
        let (out, k) = scale_to_unit_bbox(&[a, b]).unwrap();
        assert!((k - 2.5).abs() < 1e-12);
        assert!((bbox_diagonal(&out) - 1000.0).abs() < 1e-6);

        let point = PointSeq::from_frames(&[vec![[3.0; 3]]]).unwrap();
        assert_eq!(scale_to_unit_bbox(&[point]), Err(Error::DegenerateExtent));
    }
}
