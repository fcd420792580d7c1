use serde::{Deserialize, Serialize};

use super::types::{FaceLandmarkSequence, MotionSample, PoseJointSequence};
use crate::error::{Error, Result};

pub const WINDOW_FRAMES: usize = 34;
pub const SEED_FRAMES: usize = 4;
pub const DEFAULT_STRIDE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub window: usize,
    pub seed: usize,
    pub stride: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            window: WINDOW_FRAMES,
            seed: SEED_FRAMES,
            stride: DEFAULT_STRIDE,
        }
    }
}

/// A fixed-length slice of a clip; the first `seed_frames` frames are context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionWindow {
    pub offset: usize,
    pub seed_frames: usize,
    pub sample: MotionSample,
}

/// Start offsets of every full window; the short remainder is dropped.
pub fn window_offsets(len: usize, window: usize, stride: usize) -> Vec<usize> {
    if len < window || stride == 0 {
        return Vec::new();
    }
    (0..=(len - window)).step_by(stride).collect()
}

pub fn chunk(sample: &MotionSample, cfg: &ChunkConfig) -> Result<Vec<MotionWindow>> {
    if cfg.stride == 0 || cfg.seed > cfg.window {
        return Err(Error::InvalidConfig(format!("bad chunk config {cfg:?}")));
    }
    let len = sample.frames();
    if len < cfg.window {
        return Err(Error::TooShort {
            needed: cfg.window,
            got: len,
        });
    }
    let fr = sample.frame_rate();
    window_offsets(len, cfg.window, cfg.stride)
        .into_iter()
        .map(|off| {
            let s = MotionSample::new(
                sample.audio.slice_frames(off, cfg.window, fr),
                sample.transcript.window(off, cfg.window),
                sample.speaker,
                sample.speaker_count,
                FaceLandmarkSequence::new(sample.face.positions.window(off, cfg.window), fr)?,
                PoseJointSequence {
                    positions: sample.pose.positions.window(off, cfg.window),
                },
            )?;
            Ok(MotionWindow {
                offset: off,
                seed_frames: cfg.seed,
                sample: s,
            })
        })
        .collect()
}
