use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{FaceLayout, PointSeq, ReferenceFace};

/// Generator face with the lip region replaced by the superposed shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedFaceSequence {
    pub landmarks: PointSeq,
}

/// Per lip landmark, inverse-square-distance weights over the lip corners in
/// the reference face. A corner gets weight 1 on itself.
fn corner_weights(layout: &FaceLayout, reference: &ReferenceFace) -> Vec<Vec<f64>> {
    layout
        .lips
        .iter()
        .map(|&i| {
            let p = reference.positions[i];
            let d2: Vec<f64> = layout
                .lip_corners
                .iter()
                .map(|&c| {
                    let q = reference.positions[c];
                    (0..3).map(|k| (p[k] - q[k]).powi(2)).sum()
                })
                .collect();
            if let Some(hit) = layout.lip_corners.iter().position(|&c| c == i) {
                return (0..d2.len()).map(|k| if k == hit { 1.0 } else { 0.0 }).collect();
            }
            let w: Vec<f64> = d2.iter().map(|d| 1.0 / d.max(1e-12)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Lip landmarks become the phoneme prediction plus the generator's
/// lip-corner displacement from the neutral face, blended across corners.
/// Every other landmark is copied unchanged.
pub fn superpose_lips(
    face_syn: &PointSeq,
    lips_phoneme: &PointSeq,
    layout: &FaceLayout,
    reference: &ReferenceFace,
) -> Result<CombinedFaceSequence> {
    layout.validate()?;
    let l = layout.landmarks();
    if face_syn.points() != l || reference.landmarks() != l {
        return Err(Error::shape(format!(
            "face has {} landmarks, reference {}, layout {l}",
            face_syn.points(),
            reference.landmarks()
        )));
    }
    if lips_phoneme.points() != layout.lips.len() || lips_phoneme.frames() != face_syn.frames() {
        return Err(Error::shape(format!(
            "phoneme lips {}x{} for {} frames of {} lip landmarks",
            lips_phoneme.frames(),
            lips_phoneme.points(),
            face_syn.frames(),
            layout.lips.len()
        )));
    }
    let weights = corner_weights(layout, reference);
    let mut out = face_syn.clone();
    for t in 0..face_syn.frames() {
        let offsets: Vec<[f64; 3]> = layout
            .lip_corners
            .iter()
            .map(|&c| {
                let (g, r) = (face_syn.point(t, c), reference.positions[c]);
                [g[0] - r[0], g[1] - r[1], g[2] - r[2]]
            })
            .collect();
        for (k, &i) in layout.lips.iter().enumerate() {
            let mut p = lips_phoneme.point(t, k);
            for (w, o) in weights[k].iter().zip(&offsets) {
                for c in 0..3 {
                    p[c] += w * o[c];
                }
            }
            out.set_point(t, i, p);
        }
    }
    Ok(CombinedFaceSequence { landmarks: out })
}
