use std::path::{Path, PathBuf};

use cospeech::motion::{
    anchor_resample_points, chunk, view_normalize, window_offsets, ChunkConfig, FaceLandmarkSequence, FaceLayout,
    MotionSample, PoseJointSequence, PoseLayout, ReferenceFace, Skeleton,
};
use cospeech::net::Vocabulary;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{list_clips, read_clip, read_json, write_clip, write_json, Clip, Manifest};
use crate::error::{CliError, CliResult};

pub const PROCESSED_DIR: &str = "processed";
/// Worker count for per-clip fan-out; results are gathered in clip order.
pub const WORKERS_ENV: &str = "COSPEECH_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessedIndex {
    pub frame_rate: f64,
    pub speakers: Vec<String>,
    pub chunk: ChunkConfig,
    pub skeleton: Skeleton,
    /// Per-speaker neutral face, indexed like `speakers`.
    pub references: Vec<ReferenceFace>,
    pub clips: Manifest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedClip {
    pub clip: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub speakers: usize,
    pub clips: SplitCounts,
    pub windows: SplitCounts,
    pub skipped: Vec<SkippedClip>,
}

pub fn workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|n| *n > 0)
        .unwrap_or(1)
}

/// `f` over `items` on up to [`workers`] threads, results in input order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let n = workers().min(items.len().max(1));
    if n <= 1 {
        return items.iter().map(&f).collect();
    }
    let per = items.len().div_ceil(n);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(per)
            .map(|part| s.spawn(|| part.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// The default ten-joint layout with the corpus bone lengths.
pub fn pose_layout(skeleton: &Skeleton) -> CliResult<PoseLayout> {
    let mut layout = PoseLayout::default_upper_body();
    if skeleton.parents != layout.skeleton.parents {
        return Err(CliError::invalid(
            "corpus skeleton differs from the supported ten-joint upper body",
        ));
    }
    layout.skeleton = Skeleton::new(
        skeleton.parents.clone(),
        skeleton.bone_lengths.clone(),
        layout.skeleton.rest_directions.clone(),
    )?;
    Ok(layout)
}

fn meta_layout(meta: &crate::corpus::ClipMeta) -> CliResult<PoseLayout> {
    let d = PoseLayout::default_upper_body();
    if meta.parents != d.skeleton.parents || meta.bone_lengths.len() != d.skeleton.bones() {
        return Err(CliError::invalid(
            "corpus skeleton differs from the supported ten-joint upper body",
        ));
    }
    pose_layout(&Skeleton::new(
        meta.parents.clone(),
        meta.bone_lengths.clone(),
        d.skeleton.rest_directions.clone(),
    )?)
}

pub fn face_layout(landmarks: usize) -> CliResult<FaceLayout> {
    let layout = FaceLayout::default_68();
    if landmarks != layout.landmarks() {
        return Err(CliError::invalid(format!(
            "{landmarks} landmarks; the supported layout has 68"
        )));
    }
    Ok(layout)
}

/// View normalization onto `reference_frame` and root-centred joints.
pub fn normalize_clip(clip: &Clip, reference_frame: usize) -> CliResult<Clip> {
    let face = FaceLandmarkSequence::new(clip.face.clone(), clip.meta.frame_rate)?;
    let face = view_normalize(&face, reference_frame)?;
    let mut pose = clip.pose.clone();
    for t in 0..pose.frames() {
        let root = pose.point(t, 0);
        for j in 0..pose.points() {
            let p = pose.point(t, j);
            pose.set_point(t, j, [p[0] - root[0], p[1] - root[1], p[2] - root[2]]);
        }
    }
    Ok(Clip {
        face: face.positions,
        pose,
        ..clip.clone()
    })
}

/// [`normalize_clip`] followed by anchor resampling of both streams.
pub fn preprocess_clip(clip: &Clip, reference_frame: usize, window: usize) -> CliResult<Clip> {
    if clip.face.frames() < window {
        return Err(cospeech::Error::TooShort {
            needed: window,
            got: clip.face.frames(),
        }
        .into());
    }
    let c = normalize_clip(clip, reference_frame)?;
    Ok(Clip {
        face: anchor_resample_points(&c.face)?,
        pose: anchor_resample_points(&c.pose)?,
        ..c
    })
}

fn processed_root(out: &Path) -> PathBuf {
    out.join(PROCESSED_DIR)
}

pub fn cmd_preprocess(cfg: &RunConfig) -> CliResult<PreprocessStats> {
    cfg.validate()?;
    let names = list_clips(&cfg.corpus)?;
    if names.is_empty() {
        return Err(CliError::invalid(format!("no clips under {}", cfg.corpus.display())));
    }
    let loaded: Vec<CliResult<Clip>> = fan_out(&names, |n| {
        let c = read_clip(&cfg.corpus.join(n))?;
        preprocess_clip(&c, cfg.reference_frame, cfg.chunk.window)
    });
    let mut clips = Vec::new();
    let mut skipped = Vec::new();
    for (name, r) in names.iter().zip(loaded) {
        match r {
            Ok(c) => clips.push(c),
            Err(e) => {
                log::warn!("skipping clip {name}: {e}");
                skipped.push(SkippedClip {
                    clip: name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let manifest_path = cfg.corpus.join("manifest.json");
    let full = if manifest_path.is_file() {
        read_json(&manifest_path)?
    } else {
        let named: Vec<(String, String)> = clips.iter().map(|c| (c.name.clone(), c.meta.speaker.clone())).collect();
        Manifest::assign(&named, &cfg.split, cfg.seed)
    };
    let kept = |v: &[String]| -> Vec<String> {
        v.iter()
            .filter(|n| clips.iter().any(|c| &c.name == *n))
            .cloned()
            .collect()
    };
    let manifest = Manifest {
        train: kept(&full.train),
        val: kept(&full.val),
        test: kept(&full.test),
    };

    let mut speakers: Vec<String> = clips.iter().map(|c| c.meta.speaker.clone()).collect();
    speakers.sort();
    speakers.dedup();
    let first = clips
        .first()
        .ok_or_else(|| CliError::invalid("every clip was skipped"))?;
    let skeleton = meta_layout(&first.meta)?.skeleton;
    face_layout(first.meta.landmarks)?;
    for c in &clips {
        if c.meta.parents != first.meta.parents
            || c.meta.landmarks != first.meta.landmarks
            || c.meta.frame_rate != first.meta.frame_rate
        {
            return Err(CliError::invalid(format!(
                "clip {} has a different layout or frame rate",
                c.name
            )));
        }
    }
    let references = speakers
        .iter()
        .map(|s| {
            let own: Vec<&Clip> = clips.iter().filter(|c| &c.meta.speaker == s).collect();
            let train: Vec<&Clip> = own
                .iter()
                .copied()
                .filter(|c| manifest.train.contains(&c.name))
                .collect();
            let pick = if train.is_empty() { own } else { train };
            ReferenceFace::median_of(pick.iter().map(|c| &c.face))
        })
        .collect::<cospeech::Result<Vec<_>>>()?;

    let root = processed_root(&cfg.out);
    if root.exists() {
        std::fs::remove_dir_all(&root)?;
    }
    std::fs::create_dir_all(root.join("clips"))?;
    for c in &clips {
        write_clip(&root.join("clips").join(&c.name), c)?;
    }
    let windows_of = |v: &[String]| -> usize {
        v.iter()
            .map(|n| {
                let c = clips.iter().find(|c| &c.name == n).expect("kept clip");
                window_offsets(c.face.frames(), cfg.chunk.window, cfg.chunk.stride).len()
            })
            .sum()
    };
    let stats = PreprocessStats {
        speakers: speakers.len(),
        clips: SplitCounts {
            train: manifest.train.len(),
            val: manifest.val.len(),
            test: manifest.test.len(),
        },
        windows: SplitCounts {
            train: windows_of(&manifest.train),
            val: windows_of(&manifest.val),
            test: windows_of(&manifest.test),
        },
        skipped,
    };
    let index = ProcessedIndex {
        frame_rate: first.meta.frame_rate,
        speakers,
        chunk: cfg.chunk,
        skeleton,
        references,
        clips: manifest,
    };
    write_json(&root.join("index.json"), &index)?;
    write_json(&root.join("stats.json"), &stats)?;
    if stats.skipped.len() * 10 > names.len() {
        return Err(CliError::invalid(format!(
            "{} of {} clips skipped",
            stats.skipped.len(),
            names.len()
        )));
    }
    Ok(stats)
}

/// A preprocessed corpus inside a run directory.
#[derive(Clone, Debug)]
pub struct ProcessedCorpus {
    pub root: PathBuf,
    pub index: ProcessedIndex,
}

impl ProcessedCorpus {
    pub fn open(out: &Path) -> CliResult<Self> {
        let root = processed_root(out);
        let index = read_json(&root.join("index.json"))
            .map_err(|e| CliError::invalid(format!("processed corpus missing; run preprocess first ({e})")))?;
        Ok(Self { root, index })
    }

    pub fn clip(&self, name: &str) -> CliResult<Clip> {
        read_clip(&self.root.join("clips").join(name))
    }

    pub fn speaker_index(&self, name: &str) -> CliResult<usize> {
        self.index
            .speakers
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| CliError::invalid(format!("unknown speaker {name}")))
    }

    pub fn sample(&self, clip: &Clip) -> CliResult<MotionSample> {
        let fr = clip.meta.frame_rate;
        Ok(MotionSample::new(
            clip.audio.clone(),
            clip.transcript.clone(),
            self.speaker_index(&clip.meta.speaker)?,
            self.index.speakers.len(),
            FaceLandmarkSequence::new(clip.face.clone(), fr)?,
            PoseJointSequence {
                positions: clip.pose.clone(),
            },
        )?)
    }

    /// Every window of every clip in `split`, in clip order.
    pub fn windows(&self, split: &str) -> CliResult<Vec<MotionSample>> {
        let names = self.index.clips.split(split)?.to_vec();
        let per: Vec<CliResult<Vec<MotionSample>>> = fan_out(&names, |n| {
            let s = self.sample(&self.clip(n)?)?;
            Ok(chunk(&s, &self.index.chunk)?.into_iter().map(|w| w.sample).collect())
        });
        let mut out = Vec::new();
        for p in per {
            out.extend(p?);
        }
        Ok(out)
    }

    pub fn vocabulary(&self, buckets: usize) -> CliResult<Vocabulary> {
        let mut ts = Vec::new();
        for n in &self.index.clips.train {
            ts.push(self.clip(n)?.transcript);
        }
        Ok(Vocabulary::from_transcripts(&ts, buckets))
    }

    pub fn pose_layout(&self) -> CliResult<PoseLayout> {
        pose_layout(&self.index.skeleton)
    }

    pub fn face_layout(&self) -> CliResult<FaceLayout> {
        face_layout(self.index.references.first().map_or(0, ReferenceFace::landmarks))
    }

    /// Mean of the speaker references; the landmark graph is built on it.
    pub fn template(&self) -> ReferenceFace {
        let refs = &self.index.references;
        let l = refs[0].landmarks();
        let mut positions = vec![[0.0; 3]; l];
        for r in refs {
            for (a, b) in positions.iter_mut().zip(&r.positions) {
                for k in 0..3 {
                    a[k] += b[k] / refs.len() as f64;
                }
            }
        }
        ReferenceFace { positions }
    }
}
