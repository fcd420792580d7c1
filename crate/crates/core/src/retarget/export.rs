use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::lips::CombinedFaceSequence;
use super::rotation::JointRotationSequence;
use crate::error::{Error, Result};
use crate::motion::{FaceLayout, Skeleton, SEED_FRAMES, WINDOW_FRAMES};

pub const ANIMATION_FORMAT: &str = "cospeech-animation";
pub const ANIMATION_VERSION: u32 = 1;

/// Renderer-agnostic animation document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnimationDocument {
    pub format: String,
    pub version: u32,
    pub frame_rate: f64,
    pub frame_count: usize,
    /// Frames per synthesis window; consecutive windows share `seed_frames`.
    pub window_frames: usize,
    pub seed_frames: usize,
    pub window_count: usize,
    pub skeleton: Skeleton,
    pub landmark_count: usize,
    /// `[frame][joint] = [w, x, y, z]`.
    pub rotations: Vec<Vec<[f32; 4]>>,
    /// Base64 of `frame_count × landmark_count × 3` little-endian f32.
    pub landmarks: String,
}

impl AnimationDocument {
    pub fn new(
        skeleton: &Skeleton,
        rotations: &JointRotationSequence,
        face: &CombinedFaceSequence,
        frame_rate: f64,
        window_count: usize,
    ) -> Result<Self> {
        let t = rotations.frames();
        if rotations.joints != skeleton.joints() {
            return Err(Error::shape(format!(
                "rotations for {} joints, skeleton has {}",
                rotations.joints,
                skeleton.joints()
            )));
        }
        if face.landmarks.frames() != t {
            return Err(Error::shape(format!(
                "{t} rotation frames, {} face frames",
                face.landmarks.frames()
            )));
        }
        let mut bytes = Vec::with_capacity(face.landmarks.data().len() * 4);
        for v in face.landmarks.data() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        let doc = Self {
            format: ANIMATION_FORMAT.into(),
            version: ANIMATION_VERSION,
            frame_rate,
            frame_count: t,
            window_frames: WINDOW_FRAMES,
            seed_frames: SEED_FRAMES,
            window_count,
            skeleton: skeleton.clone(),
            landmark_count: face.landmarks.points(),
            rotations: rotations
                .rotations
                .chunks(rotations.joints.max(1))
                .map(|f| f.iter().map(|q| q.map(|v| v as f32)).collect())
                .collect(),
            landmarks: STANDARD.encode(bytes),
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn landmark_values(&self) -> Result<Vec<f32>> {
        let bytes = STANDARD
            .decode(&self.landmarks)
            .map_err(|e| Error::Format(format!("landmarks: {e}")))?;
        if bytes.len() != self.frame_count * self.landmark_count * 12 {
            return Err(Error::Format(format!(
                "{} landmark bytes for {} frames of {} landmarks",
                bytes.len(),
                self.frame_count,
                self.landmark_count
            )));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != ANIMATION_FORMAT || self.version != ANIMATION_VERSION {
            return Err(Error::Format(format!(
                "unsupported animation {} v{}",
                self.format, self.version
            )));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Format(format!("frame rate {}", self.frame_rate)));
        }
        if self.seed_frames >= self.window_frames {
            return Err(Error::Format(format!(
                "{} seed frames in {}-frame windows",
                self.seed_frames, self.window_frames
            )));
        }
        let stitched = match self.window_count {
            0 => 0,
            n => self.seed_frames + n * (self.window_frames - self.seed_frames),
        };
        if stitched != self.frame_count {
            return Err(Error::Format(format!(
                "{} frames do not stitch from {} windows of {}",
                self.frame_count, self.window_count, self.window_frames
            )));
        }
        if self.rotations.len() != self.frame_count {
            return Err(Error::Format(format!(
                "{} rotation frames, frame_count {}",
                self.rotations.len(),
                self.frame_count
            )));
        }
        let j = self.skeleton.joints();
        for (t, f) in self.rotations.iter().enumerate() {
            if f.len() != j {
                return Err(Error::Format(format!(
                    "frame {t}: {} rotations for {j} joints",
                    f.len()
                )));
            }
            if let Some(q) = f
                .iter()
                .find(|q| (q.iter().map(|v| v * v).sum::<f32>().sqrt() - 1.0).abs() > 1e-5)
            {
                return Err(Error::Format(format!("frame {t}: quaternion {q:?} is not unit")));
            }
        }
        self.landmark_values().map(|_| ())
    }
}

pub fn export_animation(path: &Path, doc: &AnimationDocument) -> Result<()> {
    std::fs::write(path, serde_json::to_string(doc)?)?;
    Ok(())
}

pub fn load_animation(path: &Path) -> Result<AnimationDocument> {
    let doc: AnimationDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    doc.validate()?;
    Ok(doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkMapEntry {
    pub index: usize,
    pub component: String,
    pub control_point: String,
}

/// Landmark index to mesh control-point name, `<component>_<k>` with `k`
/// counting within the component.
pub fn landmark_map(layout: &FaceLayout) -> Vec<LandmarkMapEntry> {
    let p = &layout.partition;
    let mut seen = vec![0usize; p.component_count];
    p.component_of
        .iter()
        .enumerate()
        .map(|(index, &c)| {
            let component = p.names.get(c).cloned().unwrap_or_else(|| format!("component{c}"));
            let k = seen[c];
            seen[c] += 1;
            LandmarkMapEntry {
                index,
                control_point: format!("{component}_{k}"),
                component,
            }
        })
        .collect()
}

pub fn write_landmark_map(path: &Path, layout: &FaceLayout) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&landmark_map(layout))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{PointSeq, PoseJointSequence, PoseLayout};
    use crate::retarget::positions_to_rotations;

    fn doc(windows: usize) -> (AnimationDocument, PointSeq) {
        let frames = if windows == 0 {
            0
        } else {
            SEED_FRAMES + windows * (WINDOW_FRAMES - SEED_FRAMES)
        };
        let s = PoseLayout::miniature().skeleton;
        let mut rest = PointSeq::from_frames(&vec![s.rest_pose(); frames.max(1)]).unwrap();
        if frames == 0 {
            rest = PointSeq::zeros(0, s.joints());
        }
        let rot = positions_to_rotations(&PoseJointSequence { positions: rest }, &s).unwrap();
        let data = (0..frames * 8 * 3).map(|k| k as f64 * 0.37 - 11.0).collect();
        let face = PointSeq::new(frames, 8, data).unwrap();
        let d = AnimationDocument::new(
            &s,
            &rot,
            &CombinedFaceSequence {
                landmarks: face.clone(),
            },
            15.0,
            windows,
        )
        .unwrap();
        (d, face)
    }

    #[test]
    fn round_trip_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let (d, face) = doc(2);
        export_animation(&path, &d).unwrap();
        let back = load_animation(&path).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.frame_count, 64);
        let vals = back.landmark_values().unwrap();
        assert!(vals.iter().zip(face.data()).all(|(a, b)| *a == *b as f32));
    }

    #[test]
    fn empty_motion_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        let (d, _) = doc(0);
        export_animation(&path, &d).unwrap();
        let back = load_animation(&path).unwrap();
        assert_eq!(back.frame_count, 0);
        assert!(back.landmark_values().unwrap().is_empty());
    }

    #[test]
    fn corrupt_document_rejected() {
        let (mut d, _) = doc(1);
        d.frame_count = 33;
        assert!(matches!(d.validate(), Err(Error::Format(_))));
        let (mut d, _) = doc(1);
        d.window_count = 2;
        assert!(matches!(d.validate(), Err(Error::Format(_))));
        let (mut d, _) = doc(1);
        d.rotations[1][0] = [2.0, 0.0, 0.0, 0.0];
        assert!(matches!(d.validate(), Err(Error::Format(_))));
        assert!(matches!(
            load_animation(Path::new("/nonexistent/x.json")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn landmark_map_names() {
        let m = landmark_map(&FaceLayout::default_68());
        assert_eq!(m.len(), 68);
        assert_eq!(m[48].control_point, "lips_0");
        assert_eq!(m[0].control_point, "lower_jaw_0");
        assert_eq!(m[17].component, "eyes");
    }
}
