use std::path::PathBuf;

use cospeech::metrics::{fgd, fld, mace, maje, male, MetricReport, TrainedAutoencoder};
use cospeech::motion::{scale_points, unit_bbox_scale, units_to_pose, MotionSample, PointSeq, PoseUnitSequence};
use cospeech::train::SynthesisModel;

use crate::config::RunConfig;
use crate::corpus::{read_json, write_json};
use crate::error::CliResult;
use crate::preprocess::{fan_out, ProcessedCorpus};
use crate::train::{train_samples, BestCheckpoint, BEST, CHECKPOINT_DIR};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Face landmarks and joint positions of a set of windows, in millimetres.
#[derive(Clone, Debug, Default)]
pub struct MotionSet {
    pub faces: Vec<PointSeq>,
    pub poses: Vec<PointSeq>,
}

impl MotionSet {
    pub fn ground_truth(windows: &[MotionSample]) -> Self {
        Self {
            faces: windows.iter().map(|w| w.face.positions.clone()).collect(),
            poses: windows.iter().map(|w| w.pose.positions.clone()).collect(),
        }
    }

    fn scaled(&self, face: f64, pose: f64) -> Self {
        Self {
            faces: self.faces.iter().map(|s| scale_points(s, face)).collect(),
            poses: self.poses.iter().map(|s| scale_points(s, pose)).collect(),
        }
    }
}

/// Generator output for every window of `split`, seeded from the window's
/// own first frames with the mean speaker code.
pub fn synthesize_split(corpus: &ProcessedCorpus, split: &str, model: &SynthesisModel) -> CliResult<MotionSet> {
    let samples = train_samples(corpus, split, &model.spec)?;
    let nets = model.networks();
    let zeros = vec![0.0; model.spec.plan.d_k];
    let sk = &model.spec.pose.skeleton;
    let out: Vec<CliResult<(PointSeq, PointSeq)>> = fan_out(&samples, |s| {
        let (f, u) = model.synthesize(&nets, &model.input(s, s.speaker, zeros.clone()))?;
        let (t, l) = (f.shape[0], f.shape[1]);
        let mut face = PointSeq::new(t, l, f.data)?;
        let reference = &corpus.index.references[s.speaker];
        for ti in 0..t {
            for (i, r) in reference.positions.iter().enumerate() {
                let d = face.point(ti, i);
                face.set_point(ti, i, [r[0] + d[0], r[1] + d[1], r[2] + d[2]]);
            }
        }
        let units = PoseUnitSequence {
            vectors: PointSeq::new(u.shape[0], u.shape[1], u.data)?,
        };
        Ok((face, units_to_pose(&units, sk)?.positions))
    });
    let mut set = MotionSet::default();
    for r in out {
        let (f, p) = r?;
        set.faces.push(f);
        set.poses.push(p);
    }
    Ok(set)
}

/// Metrics of `syn` against `gt`. Faces and poses are scaled separately so
/// each ground-truth union fits a 1 m bounding-box diagonal; the feature
/// autoencoders are trained on `train` scaled by the same factors.
pub fn metric_report(
    gt: &MotionSet,
    syn: &MotionSet,
    train: &MotionSet,
    cfg: &RunConfig,
    frame_rate: f64,
) -> CliResult<MetricReport> {
    if gt.faces.is_empty() {
        return Err(cospeech::Error::EmptySplit("evaluation".into()).into());
    }
    let kf = unit_bbox_scale(&gt.faces)?;
    let kp = unit_bbox_scale(&gt.poses)?;
    let (gt, syn, train) = (gt.scaled(kf, kp), syn.scaled(kf, kp), train.scaled(kf, kp));
    let face_ae = TrainedAutoencoder::train(&train.faces, &cfg.autoencoder, cfg.seed)?;
    let pose_ae = TrainedAutoencoder::train(&train.poses, &cfg.autoencoder, cfg.seed.wrapping_add(1))?;
    let report = MetricReport {
        male_mm: male(&gt.faces, &syn.faces)?,
        maje_mm: maje(&gt.poses, &syn.poses)?,
        mace_lm: mace(&gt.faces, &syn.faces, frame_rate)?,
        mace_p: mace(&gt.poses, &syn.poses, frame_rate)?,
        fld: fld(&gt.faces, &syn.faces, &face_ae)?,
        fgd: fgd(&gt.poses, &syn.poses, &pose_ae)?,
        sample_count: gt.faces.len(),
    };
    report.validate()?;
    Ok(report)
}

/// Evaluates the best checkpoint on `split`, or the ground truth against
/// itself when `ground_truth` is set. Writes `report.json` and `report.csv`.
pub fn cmd_evaluate(cfg: &RunConfig, split: &str, ground_truth: bool) -> CliResult<(MetricReport, PathBuf)> {
    cfg.validate()?;
    let corpus = ProcessedCorpus::open(&cfg.out)?;
    let windows = corpus.windows(split)?;
    if windows.is_empty() {
        return Err(cospeech::Error::EmptySplit(split.into()).into());
    }
    let gt = MotionSet::ground_truth(&windows);
    let syn = if ground_truth {
        gt.clone()
    } else {
        let best: BestCheckpoint = read_json(&cfg.out.join(CHECKPOINT_DIR).join(BEST))?;
        let spec = crate::train::build_spec(cfg, &corpus)?;
        best.model.spec.check_matches(&spec)?;
        synthesize_split(&corpus, split, &best.model)?
    };
    let train = MotionSet::ground_truth(&corpus.windows("train")?);
    let report = metric_report(&gt, &syn, &train, cfg, corpus.index.frame_rate)?;
    let path = cfg.out.join(REPORT_JSON);
    write_json(&path, &report)?;
    std::fs::write(cfg.out.join(REPORT_CSV), report.to_csv())?;
    Ok((report, path))
}
