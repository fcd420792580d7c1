use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `frames × points × 3` array of 3-D points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSeq {
    frames: usize,
    points: usize,
    data: Vec<f64>,
}

impl PointSeq {
    pub fn new(frames: usize, points: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * points * 3 {
            return Err(Error::shape(format!(
                "expected {}x{}x3 = {} values, got {}",
                frames,
                points,
                frames * points * 3,
                data.len()
            )));
        }
        Ok(Self { frames, points, data })
    }

    pub fn zeros(frames: usize, points: usize) -> Self {
        Self {
            frames,
            points,
            data: vec![0.0; frames * points * 3],
        }
    }

    pub fn from_frames(frames: &[Vec<[f64; 3]>]) -> Result<Self> {
        let points = frames.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(frames.len() * points * 3);
        for (t, f) in frames.iter().enumerate() {
            if f.len() != points {
                return Err(Error::shape(format!(
                    "frame {t} has {} points, expected {points}",
                    f.len()
                )));
            }
            data.extend(f.iter().flatten());
        }
        Ok(Self {
            frames: frames.len(),
            points,
            data,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn point(&self, t: usize, i: usize) -> [f64; 3] {
        let o = (t * self.points + i) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_point(&mut self, t: usize, i: usize, p: [f64; 3]) {
        let o = (t * self.points + i) * 3;
        self.data[o..o + 3].copy_from_slice(&p);
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let w = self.points * 3;
        &self.data[t * w..(t + 1) * w]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let w = self.points * 3;
        &mut self.data[t * w..(t + 1) * w]
    }

    pub fn frame_points(&self, t: usize) -> Vec<[f64; 3]> {
        (0..self.points).map(|i| self.point(t, i)).collect()
    }

    /// Copy of frames `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> PointSeq {
        let w = self.points * 3;
        PointSeq {
            frames: len,
            points: self.points,
            data: self.data[start * w..(start + len) * w].to_vec(),
        }
    }

    /// Keep only the listed point indices, in order.
    pub fn select_points(&self, idx: &[usize]) -> PointSeq {
        let mut out = PointSeq::zeros(self.frames, idx.len());
        for t in 0..self.frames {
            for (j, &i) in idx.iter().enumerate() {
                out.set_point(t, j, self.point(t, i));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &PointSeq) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Face landmark positions in millimetres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceLandmarkSequence {
    pub positions: PointSeq,
    pub frame_rate: f64,
}

impl FaceLandmarkSequence {
    pub fn new(positions: PointSeq, frame_rate: f64) -> Result<Self> {
        if positions.frames() == 0 {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if !positions.is_finite() {
            return Err(Error::Format("non-finite landmark value".into()));
        }
        Ok(Self { positions, frame_rate })
    }

    pub fn frames(&self) -> usize {
        self.positions.frames()
    }

    pub fn landmarks(&self) -> usize {
        self.positions.points()
    }
}

/// A speaker's neutral face, `L × 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFace {
    pub positions: Vec<[f64; 3]>,
}

impl ReferenceFace {
    pub fn landmarks(&self) -> usize {
        self.positions.len()
    }

    /// Per-landmark, per-coordinate temporal median over the given frames.
    pub fn median_of<'a>(seqs: impl IntoIterator<Item = &'a PointSeq>) -> Result<Self> {
        let seqs: Vec<&PointSeq> = seqs.into_iter().collect();
        let first = seqs.first().ok_or(Error::EmptyCorpus)?;
        let l = first.points();
        if let Some(bad) = seqs.iter().find(|s| s.points() != l) {
            return Err(Error::shape(format!(
                "landmark count {} differs from {l}",
                bad.points()
            )));
        }
        let mut positions = vec![[0.0; 3]; l];
        let mut column = Vec::new();
        for (i, p) in positions.iter_mut().enumerate() {
            for (c, v) in p.iter_mut().enumerate() {
                column.clear();
                for s in &seqs {
                    column.extend((0..s.frames()).map(|t| s.point(t, i)[c]));
                }
                column.sort_by(f64::total_cmp);
                let n = column.len();
                *v = if n % 2 == 1 {
                    column[n / 2]
                } else {
                    0.5 * (column[n / 2 - 1] + column[n / 2])
                };
            }
        }
        Ok(Self { positions })
    }
}

/// Per-frame landmark displacements from a [`ReferenceFace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceDeltaSequence {
    pub deltas: PointSeq,
}

/// Upper-body kinematic tree. Joint 0 is the root; every other joint's
/// parent precedes it, so bone `b` runs from `parents[b + 1]` to joint `b + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub parents: Vec<Option<usize>>,
    pub bone_lengths: Vec<f64>,
    /// Unit bone directions of the rest pose, used for rotation retargeting.
    pub rest_directions: Vec<[f64; 3]>,
}

impl Skeleton {
    pub fn new(parents: Vec<Option<usize>>, bone_lengths: Vec<f64>, rest_directions: Vec<[f64; 3]>) -> Result<Self> {
        let j = parents.len();
        if j < 2 {
            return Err(Error::InvalidConfig("skeleton needs at least 2 joints".into()));
        }
        if parents[0].is_some() {
            return Err(Error::InvalidConfig("joint 0 must be the root".into()));
        }
        for (c, p) in parents.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < c => {}
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "joint {c} must have a parent with a smaller index"
                    )))
                }
            }
        }
        if bone_lengths.len() != j - 1 || rest_directions.len() != j - 1 {
            return Err(Error::shape(format!(
                "{} joints need {} bone lengths and rest directions",
                j,
                j - 1
            )));
        }
        if let Some(b) = bone_lengths.iter().position(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidConfig(format!("bone {b} has non-positive length")));
        }
        let rest_directions = rest_directions
            .into_iter()
            .map(|d| {
                let n = norm3(d);
                if n < 1e-12 {
                    Err(Error::InvalidConfig("zero rest direction".into()))
                } else {
                    Ok([d[0] / n, d[1] / n, d[2] / n])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            parents,
            bone_lengths,
            rest_directions,
        })
    }

    pub fn joints(&self) -> usize {
        self.parents.len()
    }

    pub fn bones(&self) -> usize {
        self.parents.len() - 1
    }

    /// `(source joint, destination joint)` of bone `b`.
    pub fn bone_joints(&self, b: usize) -> (usize, usize) {
        (self.parents[b + 1].expect("non-root joint"), b + 1)
    }

    /// Bone ending at `joint`, if any.
    pub fn bone_into(&self, joint: usize) -> Option<usize> {
        joint.checked_sub(1)
    }

    pub fn children(&self, joint: usize) -> Vec<usize> {
        (1..self.joints()).filter(|&c| self.parents[c] == Some(joint)).collect()
    }

    /// Joint positions of the rest pose.
    pub fn rest_pose(&self) -> Vec<[f64; 3]> {
        let mut p = vec![[0.0; 3]; self.joints()];
        for b in 0..self.bones() {
            let (s, d) = self.bone_joints(b);
            let l = self.bone_lengths[b];
            let u = self.rest_directions[b];
            p[d] = [p[s][0] + l * u[0], p[s][1] + l * u[1], p[s][2] + l * u[2]];
        }
        p
    }

    /// `joints × bones` matrix with `len_b` where bone `b` lies on the path
    /// from the root to the joint, so that `P = M · U` for unit bone vectors.
    pub fn forward_kinematics_matrix(&self) -> Vec<f64> {
        let (j, nb) = (self.joints(), self.bones());
        let mut m = vec![0.0; j * nb];
        for joint in 1..j {
            let mut cur = joint;
            while let Some(b) = self.bone_into(cur) {
                m[joint * nb + b] = self.bone_lengths[b];
                cur = self.parents[cur].expect("non-root");
            }
        }
        m
    }
}

/// Joint positions in millimetres with the root at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseJointSequence {
    pub positions: PointSeq,
}

/// Unit parent-to-child bone vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseUnitSequence {
    pub vectors: PointSeq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Audio {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Sample index at which motion frame `t` starts.
    pub fn frame_start(&self, t: usize, frame_rate: f64) -> usize {
        (t as f64 * f64::from(self.sample_rate) / frame_rate).round() as usize
    }

    pub fn slice_frames(&self, start: usize, len: usize, frame_rate: f64) -> Audio {
        let a = self.frame_start(start, frame_rate).min(self.samples.len());
        let b = self.frame_start(start + len, frame_rate).min(self.samples.len());
        Audio {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    /// Half-open frame span `[start, end)`.
    pub span: Option<(usize, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub words: Vec<Word>,
}

impl Transcript {
    /// Word index per frame. Explicit spans win; otherwise frames are divided
    /// uniformly among the words in order.
    pub fn frame_words(&self, frames: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; frames];
        if self.words.is_empty() || frames == 0 {
            return out;
        }
        if self.words.iter().all(|w| w.span.is_some()) {
            for (i, w) in self.words.iter().enumerate() {
                let (s, e) = w.span.expect("checked");
                for slot in out.iter_mut().take(e.min(frames)).skip(s) {
                    *slot = Some(i);
                }
            }
        } else {
            let n = self.words.len();
            for (t, slot) in out.iter_mut().enumerate() {
                *slot = Some((t * n / frames).min(n - 1));
            }
        }
        out
    }

    /// Words overlapping `[start, start + len)`, spans shifted to the window.
    pub fn window(&self, start: usize, len: usize) -> Transcript {
        let words = self
            .words
            .iter()
            .filter_map(|w| match w.span {
                Some((s, e)) => {
                    let (s2, e2) = (s.max(start), e.min(start + len));
                    (s2 < e2).then(|| Word {
                        text: w.text.clone(),
                        span: Some((s2 - start, e2 - start)),
                    })
                }
                None => Some(w.clone()),
            })
            .collect();
        Transcript { words }
    }
}

/// One aligned clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    pub audio: Audio,
    pub transcript: Transcript,
    pub speaker: usize,
    pub speaker_count: usize,
    pub face: FaceLandmarkSequence,
    pub pose: PoseJointSequence,
}

impl MotionSample {
    pub fn new(
        audio: Audio,
        transcript: Transcript,
        speaker: usize,
        speaker_count: usize,
        face: FaceLandmarkSequence,
        pose: PoseJointSequence,
    ) -> Result<Self> {
        if face.frames() != pose.positions.frames() {
            return Err(Error::shape(format!(
                "face has {} frames, pose has {}",
                face.frames(),
                pose.positions.frames()
            )));
        }
        if speaker >= speaker_count {
            return Err(Error::NotOneHot);
        }
        Ok(Self {
            audio,
            transcript,
            speaker,
            speaker_count,
            face,
            pose,
        })
    }

    pub fn frames(&self) -> usize {
        self.face.frames()
    }

    pub fn frame_rate(&self) -> f64 {
        self.face.frame_rate
    }

    pub fn speaker_one_hot(&self) -> Vec<f64> {
        one_hot(self.speaker, self.speaker_count)
    }
}

pub fn one_hot(index: usize, count: usize) -> Vec<f64> {
    let mut v = vec![0.0; count];
    v[index] = 1.0;
    v
}

#[inline]
pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
