//! Procedural stand-in corpus. An amplitude-modulated tone carries a slow
//! speech envelope; the same envelope drives mouth opening, brow raises and
//! circular arm swings, scaled per speaker.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use cospeech::motion::{units_to_pose, Audio, PointSeq, PoseLayout, PoseUnitSequence, Transcript, Word, WINDOW_FRAMES};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SplitRatios;
use crate::corpus::{write_clip, write_json, Clip, ClipMeta, Manifest};
use crate::error::{CliError, CliResult};

pub const FRAME_RATE: f64 = 15.0;
const LIP_CENTRE_Y: f64 = -35.0;
const WORDS: [&str; 10] = [
    "so", "we", "think", "that", "this", "really", "matters", "because", "people", "talk",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub speakers: usize,
    pub clips_per_speaker: usize,
    pub frames: usize,
    /// Standard deviation of the Gaussian jitter on every coordinate, mm.
    pub noise_mm: f64,
    /// Share of the motion amplitude that follows the audio envelope.
    pub coupling: f64,
    /// Speaker `k` swings with amplitude `1 + signature_gap · k` times speaker 0's.
    pub signature_gap: f64,
    /// Mean upper-arm deviation from rest for speaker 0, radians.
    pub gesture_amplitude: f64,
    /// Mean mouth opening for speaker 0, mm.
    pub mouth_amplitude: f64,
    pub sample_rate: u32,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            speakers: 4,
            clips_per_speaker: 4,
            frames: 102,
            noise_mm: 0.3,
            coupling: 1.0,
            signature_gap: 0.25,
            gesture_amplitude: 0.35,
            mouth_amplitude: 8.0,
            sample_rate: 16000,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.speakers < 2 {
            return Err(CliError::invalid("synthetic corpus needs at least 2 speakers"));
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return Err(CliError::invalid(format!("coupling {} outside [0, 1]", self.coupling)));
        }
        if self.clips_per_speaker == 0 || self.frames < WINDOW_FRAMES || self.sample_rate == 0 {
            return Err(CliError::invalid("synthetic clips need at least one window of audio"));
        }
        if !(self.noise_mm >= 0.0
            && self.signature_gap >= 0.0
            && self.gesture_amplitude > 0.0
            && self.mouth_amplitude >= 0.0)
        {
            return Err(CliError::invalid("synthetic amplitudes must be nonnegative"));
        }
        Ok(())
    }

    pub fn speaker_amplitude(&self, k: usize) -> f64 {
        1.0 + self.signature_gap * k as f64
    }
}

pub fn speaker_name(k: usize) -> String {
    format!("speaker{k:02}")
}

/// Neutral 68-landmark face in millimetres, facing +z: jaw contour, brows,
/// nose, eyes, then outer and inner lips with corners at 48/54 and 60/64.
pub fn template_face() -> Vec<[f64; 3]> {
    let mut p = Vec::with_capacity(68);
    for i in 0..17 {
        let a = PI + PI * i as f64 / 16.0;
        p.push([
            70.0 * a.cos(),
            20.0 + 90.0 * a.sin(),
            20.0 * (PI * i as f64 / 16.0).sin(),
        ]);
    }
    for side in [-1.0, 1.0] {
        for i in 0..5 {
            let x = if side < 0.0 {
                -55.0 + 10.0 * i as f64
            } else {
                15.0 + 10.0 * i as f64
            };
            p.push([x, 45.0 + 3.0 * (PI * i as f64 / 4.0).sin(), 25.0]);
        }
    }
    for i in 0..4 {
        p.push([0.0, 35.0 - 10.0 * i as f64, 30.0 + 5.0 * i as f64]);
    }
    for i in 0..5 {
        p.push([-12.0 + 6.0 * i as f64, -5.0, 35.0]);
    }
    for cx in [-32.0, 32.0] {
        for i in 0..6 {
            let a = PI - TAU * i as f64 / 6.0;
            p.push([cx + 12.0 * a.cos(), 30.0 + 5.0 * a.sin(), 25.0]);
        }
    }
    for (n, rx, ry) in [(12usize, 25.0, 12.0), (8, 15.0, 5.0)] {
        for i in 0..n {
            let a = PI - TAU * i as f64 / n as f64;
            p.push([rx * a.cos(), LIP_CENTRE_Y + ry * a.sin(), 35.0]);
        }
    }
    p
}

/// Per-clip random shape of the speech envelope.
struct Envelope {
    f: [f64; 2],
    phase: [f64; 2],
}

impl Envelope {
    fn at(&self, secs: f64) -> f64 {
        (0.5 + 0.3 * (TAU * self.f[0] * secs + self.phase[0]).sin()
            + 0.2 * (TAU * self.f[1] * secs + self.phase[1]).sin())
        .clamp(0.05, 1.0)
    }
}

fn arm_dir(alpha: f64, beta: f64) -> [f64; 3] {
    [alpha.sin() * beta.cos(), -alpha.cos(), alpha.sin() * beta.sin()]
}

fn clip(spec: &SyntheticCorpusSpec, k: usize, c: usize, seed: u64) -> CliResult<Clip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((k * spec.clips_per_speaker + c) as u64);
    let env = Envelope {
        f: [rng.random_range(0.3..0.7), rng.random_range(1.5..3.0)],
        phase: [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)],
    };
    let free_phase: f64 = rng.random_range(0.0..TAU);
    let head: [f64; 3] = [
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
    ];
    let t_len = spec.frames;
    let amp = spec.speaker_amplitude(k);
    let cpl = spec.coupling;

    let raw: Vec<f64> = (0..t_len)
        .map(|t| {
            let s = t as f64 / FRAME_RATE;
            cpl * env.at(s) + (1.0 - cpl) * (0.5 + 0.4 * (TAU * 0.35 * s + free_phase).sin())
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / t_len as f64;
    let g: Vec<f64> = raw.iter().map(|v| v / mean).collect();

    let template = template_face();
    let mut face = PointSeq::zeros(t_len, template.len());
    for t in 0..t_len {
        let s = t as f64 / FRAME_RATE;
        let o = spec.mouth_amplitude * amp * g[t];
        let rot = Rotation3::from_euler_angles(
            0.05 * (TAU * 0.3 * s + head[1]).sin(),
            0.08 * (TAU * 0.2 * s + head[0]).sin(),
            0.0,
        );
        let shift = Vector3::new(
            6.0 * (TAU * 0.15 * s + head[2]).sin(),
            4.0 * (TAU * 0.1 * s + head[0]).sin(),
            0.0,
        );
        for (i, p) in template.iter().enumerate() {
            let mut d = [0.0; 3];
            match i {
                0..=16 => d[1] = -0.5 * o * (-(PI + PI * i as f64 / 16.0).sin()).max(0.0),
                17..=26 => d[1] = 0.15 * o,
                48..=67 => {
                    let ry = if i < 60 { 12.0 } else { 5.0 };
                    let w = ((p[1] - LIP_CENTRE_Y) / ry).abs();
                    d[1] = if p[1] < LIP_CENTRE_Y { -0.8 * o * w } else { 0.2 * o * w };
                    let corner = matches!(i, 48 | 54 | 60 | 64);
                    d[0] = p[0].signum() * if corner { 0.2 * o } else { 0.1 * o * p[0].abs() / 25.0 };
                }
                _ => {}
            }
            let v = rot * Vector3::new(p[0] + d[0], p[1] + d[1], p[2] + d[2]) + shift;
            let mut q = [v.x, v.y, v.z];
            for x in &mut q {
                *x += spec.noise_mm * rng.sample::<f64, _>(StandardNormal);
            }
            face.set_point(t, i, q);
        }
    }

    let layout = PoseLayout::default_upper_body();
    let sk = &layout.skeleton;
    let mut units = PointSeq::zeros(t_len, sk.bones());
    for t in 0..t_len {
        let s = t as f64 / FRAME_RATE;
        let alpha = spec.gesture_amplitude * amp * g[t];
        let beta = TAU * 0.6 * s + k as f64 * PI / 3.0;
        let sway = 0.04 * (TAU * 0.25 * s + head[1]).sin();
        let nod = 0.1 * g[t] * (TAU * 0.8 * s).sin();
        let dirs = [
            [-sway.sin(), sway.cos(), 0.0],
            [0.0, 1.0, 0.0],
            [0.0, nod.cos(), nod.sin()],
            [1.0, 0.0, 0.0],
            arm_dir(alpha, beta),
            arm_dir(1.5 * alpha, beta),
            [-1.0, 0.0, 0.0],
            arm_dir(alpha, beta + PI),
            arm_dir(1.5 * alpha, beta + PI),
        ];
        for (b, d) in dirs.iter().enumerate() {
            units.set_point(t, b, *d);
        }
    }
    let mut pose = units_to_pose(&PoseUnitSequence { vectors: units }, sk)?.positions;
    for v in pose.data_mut() {
        *v += spec.noise_mm * rng.sample::<f64, _>(StandardNormal);
    }

    let sr = f64::from(spec.sample_rate);
    let n = (t_len as f64 / FRAME_RATE * sr).round() as usize;
    let f0 = 110.0 * (1.0 + 0.2 * k as f64);
    let samples = (0..n)
        .map(|i| {
            let s = i as f64 / sr;
            let e = cpl * env.at(s) + (1.0 - cpl) * 0.5;
            let h = (TAU * f0 * s).sin() + 0.5 * e * (TAU * 2.0 * f0 * s).sin() + 0.25 * (TAU * 3.0 * f0 * s).sin();
            0.5 * e * h / 1.75 + 0.002 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();

    let mut words = Vec::new();
    let mut start = 0;
    while start < t_len {
        let end = (start + rng.random_range(3..9)).min(t_len);
        words.push(Word {
            text: WORDS[rng.random_range(0..WORDS.len())].into(),
            span: Some((start, end)),
        });
        start = end;
    }

    let speaker = speaker_name(k);
    Ok(Clip {
        name: format!("{speaker}_clip{c:03}"),
        meta: ClipMeta {
            frame_rate: FRAME_RATE,
            speaker,
            landmarks: template.len(),
            joints: sk.joints(),
            bone_lengths: sk.bone_lengths.clone(),
            parents: sk.parents.clone(),
        },
        audio: Audio {
            samples,
            sample_rate: spec.sample_rate,
        },
        transcript: Transcript { words },
        face,
        pose,
    })
}

pub fn generate_clips(spec: &SyntheticCorpusSpec, seed: u64) -> CliResult<Vec<Clip>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.speakers * spec.clips_per_speaker);
    for k in 0..spec.speakers {
        for c in 0..spec.clips_per_speaker {
            out.push(clip(spec, k, c, seed)?);
        }
    }
    Ok(out)
}

/// Writes every clip under `root` plus `manifest.json`.
pub fn write_corpus(root: &Path, spec: &SyntheticCorpusSpec, ratios: &SplitRatios, seed: u64) -> CliResult<Manifest> {
    let clips = generate_clips(spec, seed)?;
    std::fs::create_dir_all(root)?;
    for c in &clips {
        write_clip(&root.join(&c.name), c)?;
    }
    let named: Vec<(String, String)> = clips.iter().map(|c| (c.name.clone(), c.meta.speaker.clone())).collect();
    let manifest = Manifest::assign(&named, ratios, seed);
    write_json(&root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
