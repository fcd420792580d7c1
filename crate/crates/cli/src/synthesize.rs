use std::path::{Path, PathBuf};

use cospeech::audio::{compute_mfcc, frame_count, log_mel_spectrogram};
use cospeech::autodiff::Tensor;
use cospeech::motion::{
    face_to_deltas, pose_to_units, units_to_pose, Audio, FaceLandmarkSequence, PointSeq, PoseJointSequence,
    PoseUnitSequence, Transcript, SEED_FRAMES, WINDOW_FRAMES,
};
use cospeech::retarget::{
    export_animation, fabrik_solve, positions_to_rotations, superpose_lips, write_landmark_map, AnimationDocument,
    CombinedFaceSequence, FabrikConfig, JointRotationSequence,
};
use cospeech::train::{PhonemeModel, TrainSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::RunConfig;
use crate::corpus::{read_clip, read_json, read_transcript, read_wav};
use crate::error::{CliError, CliResult};
use crate::train::{
    mfcc_config, spectrogram_config, BestCheckpoint, PhonemeCheckpoint, BEST, CHECKPOINT_DIR, PHONEME_DIR,
};

pub const ANIMATION_FILE: &str = "animation.json";
pub const LANDMARK_MAP_FILE: &str = "landmark_map.json";

#[derive(Clone, Debug)]
pub struct SynthesisRequest {
    pub audio: PathBuf,
    pub transcript: Option<PathBuf>,
    /// Speaker name or index.
    pub speaker: String,
    /// Clip directory whose first seed frames start the motion.
    pub seed_clip: PathBuf,
    /// Draw the speaker noise from the run seed; otherwise use the mean code.
    pub sample_noise: bool,
}

/// Stitched output of autoregressive synthesis.
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub windows: usize,
    pub face: CombinedFaceSequence,
    pub pose: PoseJointSequence,
    pub rotations: JointRotationSequence,
}

fn audio_window(audio: &Audio, start: usize, fr: f64) -> Audio {
    let mut a = audio.slice_frames(start, WINDOW_FRAMES, fr);
    let want = audio.frame_start(start + WINDOW_FRAMES, fr) - audio.frame_start(start, fr);
    a.samples.resize(want, 0.0);
    a
}

fn append(dst: &mut Vec<f64>, t: &Tensor, from: usize) {
    let per = t.len() / t.shape[0];
    dst.extend_from_slice(&t.data[from * per..]);
}

/// Window `w` covers frames `[w·30, w·30 + 34)`; each window after the first
/// is seeded with the last four frames synthesized by the one before and
/// contributes its remaining 30 frames.
#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    best: &BestCheckpoint,
    phoneme: &PhonemeModel,
    audio: &Audio,
    transcript: &Transcript,
    speaker: usize,
    seed_face: &PointSeq,
    seed_pose: &PointSeq,
    noise_rng: Option<&mut ChaCha8Rng>,
) -> CliResult<Synthesized> {
    let model = &best.model;
    let spec = &model.spec;
    if speaker >= spec.speakers {
        return Err(CliError::invalid(format!("speaker {speaker} of {}", spec.speakers)));
    }
    phoneme.spec.check_matches(spec)?;
    let fr = best.frame_rate;
    let reference = &best.references[speaker];
    let sk = &spec.pose.skeleton;
    if seed_face.frames() < SEED_FRAMES || seed_pose.frames() < SEED_FRAMES {
        return Err(CliError::invalid(format!("seed motion needs {SEED_FRAMES} frames")));
    }
    let face0 = FaceLandmarkSequence::new(seed_face.window(0, SEED_FRAMES), fr)?;
    let mut face_seed = face_to_deltas(&face0, reference)?.deltas.into_data();
    let mut pose_seed = pose_to_units(
        &PoseJointSequence {
            positions: seed_pose.window(0, SEED_FRAMES),
        },
        sk,
    )?
    .vectors
    .into_data();

    let step = WINDOW_FRAMES - SEED_FRAMES;
    let windows = frame_count(audio, fr).saturating_sub(SEED_FRAMES).div_ceil(step).max(1);
    let nets = model.networks();
    let (l, b, lips) = (spec.landmarks(), spec.bones(), spec.lips());
    let mfcc_cfg = mfcc_config();
    let mel_cfg = spectrogram_config();
    let mut rng = noise_rng;
    let (mut deltas, mut units, mut lip_pts) = (Vec::new(), Vec::new(), Vec::new());
    for w in 0..windows {
        let start = w * step;
        let a = audio_window(audio, start, fr);
        let mut face = vec![0.0; WINDOW_FRAMES * l * 3];
        face[..face_seed.len()].copy_from_slice(&face_seed);
        let mut pose = vec![0.0; WINDOW_FRAMES * b * 3];
        pose[..pose_seed.len()].copy_from_slice(&pose_seed);
        let sample = TrainSample {
            speaker,
            mfcc: Tensor::new(
                vec![WINDOW_FRAMES, spec.mfcc_dim],
                compute_mfcc(&a, WINDOW_FRAMES, &mfcc_cfg)?,
            ),
            word_rows: spec
                .vocabulary
                .frame_rows(&transcript.window(start, WINDOW_FRAMES), WINDOW_FRAMES),
            face_deltas: Tensor::new(vec![WINDOW_FRAMES, l, 3], face),
            pose_units: Tensor::new(vec![WINDOW_FRAMES, b, 3], pose),
        };
        let noise = match rng.as_deref_mut() {
            Some(r) => (0..spec.plan.d_k).map(|_| r.sample(StandardNormal)).collect(),
            None => vec![0.0; spec.plan.d_k],
        };
        let (f, u) = model.synthesize(&nets, &model.input(&sample, speaker, noise))?;
        let mel = Tensor::new(
            vec![WINDOW_FRAMES, mel_cfg.mel_bands],
            log_mel_spectrogram(&a, WINDOW_FRAMES, &mel_cfg)?,
        );
        let lp = phoneme.predict(&mel)?;
        let from = if w == 0 { 0 } else { SEED_FRAMES };
        append(&mut deltas, &f, from);
        append(&mut units, &u, from);
        append(&mut lip_pts, &lp, from);
        face_seed = f.data[step * l * 3..].to_vec();
        pose_seed = u.data[step * b * 3..].to_vec();
    }
    let frames = SEED_FRAMES + windows * step;
    let mut face = PointSeq::new(frames, l, deltas)?;
    for t in 0..frames {
        for (i, r) in reference.positions.iter().enumerate() {
            let d = face.point(t, i);
            face.set_point(t, i, [r[0] + d[0], r[1] + d[1], r[2] + d[2]]);
        }
    }
    let lips_seq = PointSeq::new(frames, lips, lip_pts)?;
    let combined = superpose_lips(&face, &lips_seq, &spec.face, reference)?;

    let joints = units_to_pose(
        &PoseUnitSequence {
            vectors: PointSeq::new(frames, b, units)?,
        },
        sk,
    )?
    .positions;
    let leaves: Vec<usize> = (1..sk.joints()).filter(|&j| sk.children(j).is_empty()).collect();
    let fab = FabrikConfig::default();
    let tol = fab.tolerance(sk);
    let mut solved = PointSeq::zeros(frames, sk.joints());
    let mut prev = sk.rest_pose();
    for t in 0..frames {
        let targets: Vec<(usize, [f64; 3])> = leaves.iter().map(|&j| (j, joints.point(t, j))).collect();
        let r = fabrik_solve(&prev, sk, &targets, fab.max_iters, tol)?;
        for (j, p) in r.positions.iter().enumerate() {
            solved.set_point(t, j, *p);
        }
        prev = r.positions;
    }
    let pose = PoseJointSequence { positions: solved };
    let rotations = positions_to_rotations(&pose, sk)?;
    Ok(Synthesized {
        windows,
        face: combined,
        pose,
        rotations,
    })
}

pub fn resolve_speaker(best: &BestCheckpoint, s: &str) -> CliResult<usize> {
    if let Some(i) = best.speakers.iter().position(|n| n == s) {
        return Ok(i);
    }
    s.parse::<usize>()
        .ok()
        .filter(|i| *i < best.speakers.len())
        .ok_or_else(|| CliError::invalid(format!("unknown speaker {s}")))
}

pub fn cmd_synthesize(cfg: &RunConfig, req: &SynthesisRequest) -> CliResult<PathBuf> {
    cfg.validate()?;
    for p in [&req.audio, &req.seed_clip] {
        if !p.exists() {
            return Err(CliError::invalid(format!("{} does not exist", p.display())));
        }
    }
    let best: BestCheckpoint = read_json(&cfg.out.join(CHECKPOINT_DIR).join(BEST))?;
    let phoneme: PhonemeCheckpoint = read_json(&cfg.out.join(PHONEME_DIR).join(BEST))?;
    let speaker = resolve_speaker(&best, &req.speaker)?;
    let audio = read_wav(&req.audio)?;
    let transcript = match &req.transcript {
        Some(p) => read_transcript(p)?,
        None => Transcript::default(),
    };
    let seed = crate::preprocess::normalize_clip(&read_clip(&req.seed_clip)?, cfg.reference_frame)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let out = synthesize(
        &best,
        &phoneme.model,
        &audio,
        &transcript,
        speaker,
        &seed.face,
        &seed.pose,
        req.sample_noise.then_some(&mut rng),
    )?;
    let doc = AnimationDocument::new(
        &best.model.spec.pose.skeleton,
        &out.rotations,
        &out.face,
        best.frame_rate,
        out.windows,
    )?;
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(ANIMATION_FILE);
    export_animation(&path, &doc)?;
    write_landmark_map(&cfg.out.join(LANDMARK_MAP_FILE), &best.model.spec.face)?;
    Ok(path)
}

pub fn animation_path(out: &Path) -> PathBuf {
    out.join(ANIMATION_FILE)
}
