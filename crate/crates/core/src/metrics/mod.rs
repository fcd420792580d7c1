//! Reconstruction errors (MALE, MAJE, MAcE) and Fréchet distances between
//! autoencoder feature distributions (FLD, FGD).

mod encoder;
mod frechet;

use serde::{Deserialize, Serialize};

pub use encoder::{fgd, fld, AutoencoderConfig, MotionAutoencoder, TrainedAutoencoder};
pub use frechet::{frechet_distance, FeatureGaussian};

use crate::error::{Error, Result};
use crate::motion::PointSeq;

fn check_pairs(gt: &[PointSeq], syn: &[PointSeq]) -> Result<()> {
    if gt.len() != syn.len() {
        return Err(Error::shape(format!(
            "{} ground-truth sequences, {} synthesized",
            gt.len(),
            syn.len()
        )));
    }
    for (i, (g, s)) in gt.iter().zip(syn).enumerate() {
        if g.frames() != s.frames() || g.points() != s.points() {
            return Err(Error::shape(format!(
                "sequence {i}: {}x{} vs {}x{}",
                g.frames(),
                g.points(),
                s.frames(),
                s.points()
            )));
        }
    }
    if gt.iter().all(|g| g.frames() == 0 || g.points() == 0) {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

fn mean_point_error(gt: &[PointSeq], syn: &[PointSeq]) -> Result<f64> {
    check_pairs(gt, syn)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (g, s) in gt.iter().zip(syn) {
        for (a, b) in g.data().chunks_exact(3).zip(s.data().chunks_exact(3)) {
            sum += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

/// Mean absolute landmark error: mean Euclidean distance over samples,
/// frames and landmarks. Inputs are expected in millimetres after scaling to
/// the unit bounding box.
pub fn male(gt: &[PointSeq], syn: &[PointSeq]) -> Result<f64> {
    mean_point_error(gt, syn)
}

/// Mean absolute joint error; same reduction as [`male`].
pub fn maje(gt: &[PointSeq], syn: &[PointSeq]) -> Result<f64> {
    mean_point_error(gt, syn)
}

/// Mean Euclidean error between second differences scaled by
/// `frame_rate²`, in mm/s².
pub fn mace(gt: &[PointSeq], syn: &[PointSeq], frame_rate: f64) -> Result<f64> {
    check_pairs(gt, syn)?;
    if let Some(g) = gt.iter().find(|g| g.frames() < 3) {
        return Err(Error::TooShort {
            needed: 3,
            got: g.frames(),
        });
    }
    let k = frame_rate * frame_rate;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (g, s) in gt.iter().zip(syn) {
        for t in 1..g.frames() - 1 {
            for i in 0..g.points() {
                let (g0, g1, g2) = (g.point(t - 1, i), g.point(t, i), g.point(t + 1, i));
                let (s0, s1, s2) = (s.point(t - 1, i), s.point(t, i), s.point(t + 1, i));
                let mut e = 0.0;
                for c in 0..3 {
                    let ag = (g2[c] - 2.0 * g1[c] + g0[c]) * k;
                    let as_ = (s2[c] - 2.0 * s1[c] + s0[c]) * k;
                    e += (ag - as_).powi(2);
                }
                sum += e.sqrt();
                n += 1;
            }
        }
    }
    Ok(sum / n as f64)
}

/// One row of results in the order MALE, MAJE, MAcE-LM, MAcE-P, FLD, FGD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub male_mm: f64,
    pub maje_mm: f64,
    pub mace_lm: f64,
    pub mace_p: f64,
    pub fld: f64,
    pub fgd: f64,
    pub sample_count: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "MALE,MAJE,MAcE-LM,MAcE-P,FLD,FGD";

    pub fn validate(&self) -> Result<()> {
        let v = self.values();
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Format(format!(
                "metric value {bad} is not a finite nonnegative number"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.male_mm,
            self.maje_mm,
            self.mace_lm,
            self.mace_p,
            self.fld,
            self.fgd,
        ]
    }

    pub fn to_csv(&self) -> String {
        let row: Vec<String> = self.values().iter().map(|v| v.to_string()).collect();
        format!("{}\n{}\n", Self::CSV_HEADER, row.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn seq(frames: usize, points: usize, f: impl Fn(usize, usize, usize) -> f64) -> PointSeq {
        let data = (0..frames * points * 3)
            .map(|k| f(k / (points * 3), (k / 3) % points, k % 3))
            .collect();
        PointSeq::new(frames, points, data).unwrap()
    }

    #[test]
    fn identical_and_offset() {
        let a = vec![seq(5, 4, |t, i, c| (t * 7 + i * 3 + c) as f64)];
        assert_eq!(male(&a, &a).unwrap(), 0.0);
        let b = vec![seq(5, 4, |t, i, c| {
            (t * 7 + i * 3 + c) as f64 + if c == 0 { 1.0 } else { 0.0 }
        })];
        assert!((maje(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            male(&a, &[seq(4, 4, |_, _, _| 0.0)]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn matches_loop_oracle() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let gen = || seq(6, 5, |_, _, _| 0.0);
        let mut gt: Vec<PointSeq> = (0..3).map(|_| gen()).collect();
        let mut sy: Vec<PointSeq> = (0..3).map(|_| gen()).collect();
        for s in gt.iter_mut().chain(sy.iter_mut()) {
            s.data_mut().iter_mut().for_each(|v| *v = r.random_range(-50.0..50.0));
        }
        let mut total = 0.0;
        let mut count = 0.0;
        for s in 0..3 {
            for t in 0..6 {
                for i in 0..5 {
                    let (a, b) = (gt[s].point(t, i), sy[s].point(t, i));
                    let d2: f64 = (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum();
                    total += d2.sqrt();
                    count += 1.0;
                }
            }
        }
        assert!((male(&gt, &sy).unwrap() - total / count).abs() < 1e-12);
    }

    #[test]
    fn acceleration_cases() {
        let lin_a = vec![seq(8, 2, |t, i, c| 3.0 * t as f64 + (i + c) as f64)];
        let lin_b = vec![seq(8, 2, |t, _, c| -2.0 * t as f64 + c as f64)];
        assert!(mace(&lin_a, &lin_b, 15.0).unwrap().abs() < 1e-9);
        assert_eq!(mace(&lin_a, &lin_a, 15.0).unwrap(), 0.0);

        let a = 3.5;
        let quad = vec![seq(10, 3, |t, _, c| {
            let s = t as f64 / 15.0;
            if c == 1 {
                0.5 * a * s * s
            } else {
                0.0
            }
        })];
        let still = vec![seq(10, 3, |_, _, _| 0.0)];
        assert!((mace(&quad, &still, 15.0).unwrap() - a).abs() < 1e-9);
        assert_eq!(
            mace(&[seq(2, 1, |_, _, _| 0.0)], &[seq(2, 1, |_, _, _| 0.0)], 15.0).err(),
            Some(Error::TooShort { needed: 3, got: 2 })
        );
    }

    #[test]
    fn report_csv_order() {
        let r = MetricReport {
            male_mm: 1.0,
            maje_mm: 2.0,
            mace_lm: 3.0,
            mace_p: 4.0,
            fld: 5.0,
            fgd: 6.0,
            sample_count: 7,
        };
        assert_eq!(r.to_csv(), "MALE,MAJE,MAcE-LM,MAcE-P,FLD,FGD\n1,2,3,4,5,6\n");
        r.validate().unwrap();
        assert!(MetricReport { fld: -1.0, ..r }.validate().is_err());
    }

    proptest! {
        #[test]
        fn error_metrics_symmetric_and_zero_on_self(v in proptest::collection::vec(-100.0f64..100.0, 36), w in proptest::collection::vec(-100.0f64..100.0, 36)) {
            let a = vec![PointSeq::new(3, 4, v).unwrap()];
            let b = vec![PointSeq::new(3, 4, w).unwrap()];
            prop_assert_eq!(male(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(mace(&a, &a, 15.0).unwrap(), 0.0);
            prop_assert!((male(&a, &b).unwrap() - male(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(male(&a, &b).unwrap() >= 0.0);
        }
    }
}
