//! On-disk corpus layout: one directory per clip holding `audio.wav`,
//! `transcript.tsv`, `face.f32`, `pose.f32` and `meta.json`, plus a
//! `manifest.json` listing clip directories per split.

use std::collections::BTreeMap;
use std::path::Path;

use cospeech::motion::{Audio, PointSeq, Transcript, Word};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SplitRatios;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub frame_rate: f64,
    pub speaker: String,
    pub landmarks: usize,
    pub joints: usize,
    pub bone_lengths: Vec<f64>,
    /// `null` for the root.
    pub parents: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    pub name: String,
    pub meta: ClipMeta,
    pub audio: Audio,
    pub transcript: Transcript,
    pub face: PointSeq,
    pub pose: PointSeq,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Manifest {
    /// Deterministic clip split. Each speaker's clips are shuffled, speakers
    /// are interleaved round-robin, and the test then validation shares are
    /// cut from the front of that order, each rounded to whole clips.
    pub fn assign(clips: &[(String, String)], ratios: &SplitRatios, seed: u64) -> Self {
        let mut by_speaker: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (name, speaker) in clips {
            by_speaker.entry(speaker).or_default().push(name);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut groups: Vec<Vec<&str>> = by_speaker
            .into_values()
            .map(|mut g| {
                g.sort();
                g.shuffle(&mut rng);
                g
            })
            .collect();
        let mut order = Vec::with_capacity(clips.len());
        let longest = groups.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..longest {
            for g in &mut groups {
                if let Some(n) = g.get(i) {
                    order.push(n.to_string());
                }
            }
        }
        let n = order.len() as f64;
        let n_test = (n * ratios.test).round() as usize;
        let n_val = ((n * ratios.val).round() as usize).min(order.len() - n_test);
        let sorted = |v: &[String]| {
            let mut v = v.to_vec();
            v.sort();
            v
        };
        Self {
            test: sorted(&order[..n_test]),
            val: sorted(&order[n_test..n_test + n_val]),
            train: sorted(&order[n_test + n_val..]),
        }
    }

    pub fn split(&self, name: &str) -> CliResult<&[String]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            _ => Err(CliError::invalid(format!("unknown split {name}"))),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

pub fn write_f32(path: &Path, values: &[f64]) -> CliResult<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_f32(path: &Path) -> CliResult<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(CliError::invalid(format!(
            "{}: length is not a multiple of 4",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect())
}

/// 16-bit mono PCM.
pub fn write_wav(path: &Path, audio: &Audio) -> CliResult<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w =
        hound::WavWriter::create(path, spec).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    for s in &audio.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    }
    w.finalize()
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reads 16-bit PCM, averaging channels.
pub fn read_wav(path: &Path) -> CliResult<Audio> {
    let bad = |e: hound::Error| CliError::invalid(format!("{}: {e}", path.display()));
    let mut r = hound::WavReader::open(path).map_err(bad)?;
    let spec = r.spec();
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(CliError::invalid(format!("{}: expected 16-bit PCM", path.display())));
    }
    let raw: Vec<i16> = r.samples::<i16>().collect::<Result<_, _>>().map_err(bad)?;
    let ch = usize::from(spec.channels.max(1));
    let samples = raw
        .chunks(ch)
        .map(|f| f.iter().map(|v| f64::from(*v) / 32768.0).sum::<f64>() / ch as f64)
        .collect();
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

pub fn write_transcript(path: &Path, t: &Transcript) -> CliResult<()> {
    let mut s = String::new();
    for w in &t.words {
        match w.span {
            Some((a, b)) => s.push_str(&format!("{}\t{a}\t{b}\n", w.text)),
            None => s.push_str(&format!("{}\n", w.text)),
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// `word<TAB>start_frame<TAB>end_frame` per line; spans may be omitted.
pub fn read_transcript(path: &Path) -> CliResult<Transcript> {
    let text = std::fs::read_to_string(path)?;
    let mut words = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let span = match cols.len() {
            1 => None,
            3 => {
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::invalid(format!("{}:{}: bad frame {s}", path.display(), n + 1)))
                };
                let (a, b) = (parse(cols[1])?, parse(cols[2])?);
                if b < a {
                    return Err(CliError::invalid(format!(
                        "{}:{}: span ends before it starts",
                        path.display(),
                        n + 1
                    )));
                }
                Some((a, b))
            }
            _ => {
                return Err(CliError::invalid(format!(
                    "{}:{}: expected 1 or 3 columns",
                    path.display(),
                    n + 1
                )))
            }
        };
        words.push(Word {
            text: cols[0].to_string(),
            span,
        });
    }
    Ok(Transcript { words })
}

pub fn write_clip(dir: &Path, clip: &Clip) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    write_wav(&dir.join("audio.wav"), &clip.audio)?;
    write_transcript(&dir.join("transcript.tsv"), &clip.transcript)?;
    write_f32(&dir.join("face.f32"), clip.face.data())?;
    write_f32(&dir.join("pose.f32"), clip.pose.data())?;
    write_json(&dir.join("meta.json"), &clip.meta)
}

pub fn read_clip(dir: &Path) -> CliResult<Clip> {
    let meta: ClipMeta = read_json(&dir.join("meta.json"))?;
    if meta.parents.len() != meta.joints || meta.bone_lengths.len() + 1 != meta.joints {
        return Err(CliError::invalid(format!(
            "{}: skeleton sizes disagree with {} joints",
            dir.display(),
            meta.joints
        )));
    }
    if !(meta.frame_rate > 0.0) {
        return Err(CliError::invalid(format!(
            "{}: frame rate {}",
            dir.display(),
            meta.frame_rate
        )));
    }
    let points = |file: &str, n: usize| -> CliResult<PointSeq> {
        let v = read_f32(&dir.join(file))?;
        if n == 0 || v.len() % (n * 3) != 0 {
            return Err(CliError::invalid(format!(
                "{}/{file}: {} values for {n} points",
                dir.display(),
                v.len()
            )));
        }
        Ok(PointSeq::new(v.len() / (n * 3), n, v)?)
    };
    let face = points("face.f32", meta.landmarks)?;
    let pose = points("pose.f32", meta.joints)?;
    if face.frames() != pose.frames() {
        return Err(CliError::invalid(format!(
            "{}: {} face frames, {} pose frames",
            dir.display(),
            face.frames(),
            pose.frames()
        )));
    }
    Ok(Clip {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        audio: read_wav(&dir.join("audio.wav"))?,
        transcript: read_transcript(&dir.join("transcript.tsv"))?,
        meta,
        face,
        pose,
    })
}

/// Sorted names of subdirectories holding a `meta.json`.
pub fn list_clips(root: &Path) -> CliResult<Vec<String>> {
    let mut names = Vec::new();
    for e in std::fs::read_dir(root).map_err(|e| CliError::invalid(format!("{}: {e}", root.display())))? {
        let e = e?;
        if e.path().join("meta.json").is_file() {
            names.push(e.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let clip = Clip {
            name: "c0".into(),
            meta: ClipMeta {
                frame_rate: 15.0,
                speaker: "a".into(),
                landmarks: 2,
                joints: 2,
                bone_lengths: vec![1.5],
                parents: vec![None, Some(0)],
            },
            audio: Audio {
                samples: vec![0.0, 0.5, -0.25, -1.0],
                sample_rate: 16000,
            },
            transcript: Transcript {
                words: vec![
                    Word {
                        text: "hi".into(),
                        span: Some((0, 2)),
                    },
                    Word {
                        text: "there".into(),
                        span: Some((2, 3)),
                    },
                ],
            },
            face: PointSeq::new(3, 2, (0..18).map(|v| v as f64 * 0.5).collect()).unwrap(),
            pose: PointSeq::new(3, 2, (0..18).map(|v| v as f64 * 0.25).collect()).unwrap(),
        };
        let p = dir.path().join("c0");
        write_clip(&p, &clip).unwrap();
        assert_eq!(read_clip(&p).unwrap(), clip);
        assert_eq!(list_clips(dir.path()).unwrap(), vec!["c0".to_string()]);
    }

    #[test]
    fn split_ratios_hold_to_one_clip() {
        for n in [10usize, 17, 32, 41] {
            let clips: Vec<(String, String)> = (0..n).map(|i| (format!("c{i:03}"), format!("s{}", i % 4))).collect();
            let m = Manifest::assign(&clips, &SplitRatios::default(), 3);
            assert_eq!(m.train.len() + m.val.len() + m.test.len(), n);
            for (got, r) in [(m.train.len(), 0.8), (m.val.len(), 0.1), (m.test.len(), 0.1)] {
                assert!((got as f64 - r * n as f64).abs() <= 1.0, "{n}: {got} vs {r}");
            }
            assert_eq!(m, Manifest::assign(&clips, &SplitRatios::default(), 3));
        }
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tsv");
        std::fs::write(&p, "a\t1\n").unwrap();
        assert!(read_transcript(&p).is_err());
        std::fs::write(&p, "a\t3\t1\n").unwrap();
        assert!(read_transcript(&p).is_err());
        std::fs::write(&p, "a\nb\n").unwrap();
        assert!(read_transcript(&p).unwrap().words.iter().all(|w| w.span.is_none()));
        let f = dir.path().join("x.f32");
        std::fs::write(&f, [0u8; 5]).unwrap();
        assert!(read_f32(&f).is_err());
    }
}
