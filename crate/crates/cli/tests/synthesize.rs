mod common;

use cospeech::retarget::load_animation;
use cospeech_cli::corpus::{read_wav, write_wav};
use cospeech_cli::synthesize::{cmd_synthesize, SynthesisRequest};

fn request(cfg: &cospeech_cli::RunConfig, clip: &str) -> SynthesisRequest {
    let dir = cfg.corpus.join(clip);
    SynthesisRequest {
        audio: dir.join("audio.wav"),
        transcript: Some(dir.join("transcript.tsv")),
        speaker: "speaker01".into(),
        seed_clip: cfg.corpus.join("speaker01_clip000"),
        sample_noise: false,
    }
}

#[test]
fn stitched_windows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::trained(dir.path());
    let req = request(&cfg, "speaker00_clip001");

    let path = cmd_synthesize(&cfg, &req).unwrap();
    let doc = load_animation(&path).unwrap();
    // 102 frames of audio: ceil((102 − 4) / 30) = 4 windows of 34 frames
    // sharing 4 frames with their predecessor.
    assert_eq!((doc.window_count, doc.window_frames, doc.seed_frames), (4, 34, 4));
    assert_eq!(doc.frame_count, 4 + 4 * 30);
    assert_eq!(doc.rotations.len(), doc.frame_count);
    assert!(cfg.out.join("landmark_map.json").is_file());
    let bytes = std::fs::read(&path).unwrap();
    cmd_synthesize(&cfg, &req).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);

    let sampled = SynthesisRequest {
        sample_noise: true,
        ..req.clone()
    };
    cmd_synthesize(&cfg, &sampled).unwrap();
    let a = load_animation(&path).unwrap();
    cfg.seed += 1;
    cmd_synthesize(&cfg, &sampled).unwrap();
    let b = load_animation(&path).unwrap();
    assert_eq!(a.frame_count, b.frame_count);
    assert_eq!(a.landmark_values().unwrap().len(), b.landmark_values().unwrap().len());
    assert_ne!(a.landmark_values().unwrap(), b.landmark_values().unwrap());
}

#[test]
fn lips_follow_the_audio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path());
    let lips = |req: &SynthesisRequest| {
        let doc = load_animation(&cmd_synthesize(&cfg, req).unwrap()).unwrap();
        let v = doc.landmark_values().unwrap();
        let l = doc.landmark_count;
        (0..doc.frame_count)
            .flat_map(|t| v[(t * l + 48) * 3..(t * l + 68) * 3].to_vec())
            .collect::<Vec<f32>>()
    };
    let a = request(&cfg, "speaker00_clip001");
    let mut b = request(&cfg, "speaker01_clip002");
    // Same length as the first audio so only the content differs.
    let mut audio = read_wav(&b.audio).unwrap();
    audio.samples.truncate(read_wav(&a.audio).unwrap().samples.len());
    b.audio = dir.path().join("other.wav");
    b.transcript = a.transcript.clone();
    write_wav(&b.audio, &audio).unwrap();
    assert_ne!(lips(&a), lips(&b));
}

#[test]
fn unknown_speaker_and_missing_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::trained(dir.path());
    let mut req = request(&cfg, "speaker00_clip001");
    req.speaker = "nobody".into();
    assert_eq!(cmd_synthesize(&cfg, &req).unwrap_err().exit_code(), 2);
    req.speaker = "1".into();
    cmd_synthesize(&cfg, &req).unwrap();
    std::fs::remove_dir_all(cfg.out.join("checkpoints")).unwrap();
    assert!(cmd_synthesize(&cfg, &req).is_err());
}
