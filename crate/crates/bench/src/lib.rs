//! Fixtures shared by the benchmarks.

use cospeech::autodiff::Tensor;
use cospeech::motion::{FaceLayout, PoseLayout, ReferenceFace};
use cospeech::net::{ArchConfig, DimensionPlan, NetworkSpec, Vocabulary};
use cospeech::train::{SynthesisModel, TrainSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FRAMES: usize = 34;

/// Spec over the 68-landmark face and default upper body.
pub fn spec(d: usize, depth: usize, hidden: usize) -> NetworkSpec {
    let template = ReferenceFace {
        positions: (0..68)
            .map(|i| {
                let a = i as f64 * 0.3;
                [50.0 * a.cos(), 60.0 * a.sin(), (i % 5) as f64]
            })
            .collect(),
    };
    let arch = ArchConfig {
        graph_depth: depth,
        decoder_hidden: hidden,
        discriminator_hidden: hidden,
        ..ArchConfig::default()
    };
    NetworkSpec::new(
        DimensionPlan::uniform(d).unwrap(),
        arch,
        FaceLayout::default_68(),
        PoseLayout::default_upper_body(),
        &template,
        4,
        26,
        40,
        Vocabulary::new(["a", "b"], 8),
    )
    .unwrap()
}

pub fn samples(n: usize) -> Vec<TrainSample> {
    let t = FRAMES;
    (0..n)
        .map(|i| TrainSample {
            speaker: i % 4,
            mfcc: Tensor::new(vec![t, 26], (0..t * 26).map(|k| (k as f64 * 0.1).sin()).collect()),
            word_rows: vec![0; t],
            face_deltas: Tensor::new(
                vec![t, 68, 3],
                (0..t * 68 * 3).map(|k| (k as f64 * 0.01 + i as f64).sin()).collect(),
            ),
            pose_units: Tensor::new(
                vec![t, 9, 3],
                (0..t * 9)
                    .flat_map(|k| {
                        let a = (k as f64 * 0.1 + i as f64).sin();
                        [a.sin(), a.cos(), 0.0]
                    })
                    .collect(),
            ),
        })
        .collect()
}

pub fn model(spec: NetworkSpec, data: &[TrainSample]) -> SynthesisModel {
    SynthesisModel::new(spec, data, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
}
