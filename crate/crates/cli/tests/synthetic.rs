mod common;

use cospeech::motion::{chunk, ChunkConfig, FaceLandmarkSequence, MotionSample, PoseJointSequence};
use cospeech_cli::config::SplitRatios;
use cospeech_cli::corpus::{list_clips, read_clip};
use cospeech_cli::synthetic::{generate_clips, write_corpus, SyntheticCorpusSpec, FRAME_RATE};

#[test]
fn two_speakers_four_clips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticCorpusSpec {
        speakers: 2,
        clips_per_speaker: 4,
        frames: 102,
        ..Default::default()
    };
    write_corpus(dir.path(), &spec, &SplitRatios::default(), 1).unwrap();
    let names = list_clips(dir.path()).unwrap();
    assert_eq!(names.len(), 8);
    let cfg = ChunkConfig {
        stride: 34,
        ..Default::default()
    };
    for n in &names {
        let c = read_clip(&dir.path().join(n)).unwrap();
        let s = MotionSample::new(
            c.audio,
            c.transcript,
            0,
            2,
            FaceLandmarkSequence::new(c.face, c.meta.frame_rate).unwrap(),
            PoseJointSequence { positions: c.pose },
        )
        .unwrap();
        let w = chunk(&s, &cfg).unwrap();
        assert_eq!(w.len(), 3, "{n}");
        assert!(w.iter().all(|w| w.sample.frames() == 34));
    }
}

#[test]
fn envelope_drives_arm_swing() {
    let spec = SyntheticCorpusSpec {
        speakers: 2,
        clips_per_speaker: 3,
        frames: 150,
        noise_mm: 0.0,
        ..Default::default()
    };
    for clip in generate_clips(&spec, 9).unwrap() {
        let per = (f64::from(clip.audio.sample_rate) / FRAME_RATE) as usize;
        let rms: Vec<f64> = (0..clip.pose.frames())
            .map(|t| {
                let s = &clip.audio.samples[t * per..(t + 1) * per];
                (s.iter().map(|v| v * v).sum::<f64>() / per as f64).sqrt()
            })
            .collect();
        // Angle between the left upper arm (joints 4 -> 5) and straight down.
        let swing: Vec<f64> = (0..clip.pose.frames())
            .map(|t| {
                let (a, b) = (clip.pose.point(t, 4), clip.pose.point(t, 5));
                let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                (-d[1] / (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()).acos()
            })
            .collect();
        let r = common::pearson(&rms, &swing);
        assert!(r > 0.8, "{}: r = {r}", clip.name);
    }
}

#[test]
fn speaker_gesture_amplitudes_follow_gap() {
    let spec = SyntheticCorpusSpec {
        speakers: 2,
        clips_per_speaker: 4,
        frames: 120,
        noise_mm: 0.0,
        signature_gap: 0.3,
        ..Default::default()
    };
    let clips = generate_clips(&spec, 3).unwrap();
    // Mean angle between the left upper arm (joints 4 → 5) and straight down.
    let mean_angle = |speaker: &str| {
        let (mut sum, mut n) = (0.0, 0usize);
        for c in clips.iter().filter(|c| c.meta.speaker == speaker) {
            for t in 0..c.pose.frames() {
                let (a, b) = (c.pose.point(t, 4), c.pose.point(t, 5));
                let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                sum += (-d[1] / len).acos();
                n += 1;
            }
        }
        sum / n as f64
    };
    let ratio = mean_angle("speaker01") / mean_angle("speaker00");
    assert!((ratio - 1.3).abs() < 1e-6, "{ratio}");
}

#[test]
fn deterministic_under_seed() {
    let spec = SyntheticCorpusSpec {
        speakers: 2,
        clips_per_speaker: 1,
        ..Default::default()
    };
    assert_eq!(generate_clips(&spec, 4).unwrap(), generate_clips(&spec, 4).unwrap());
    assert_ne!(generate_clips(&spec, 4).unwrap(), generate_clips(&spec, 5).unwrap());
}
