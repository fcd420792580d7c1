//! Generator, discriminator and phoneme predictor built on the autodiff tape.
//!
//! Architecture structs hold only shapes and constant graph data; all weights
//! live in a [`ParamSet`] so one architecture can run any set of weights.

mod discriminator;
mod generator;
pub mod gradcheck;
pub mod layers;
mod params;
mod phoneme;
mod text;

use serde::{Deserialize, Serialize};

pub use discriminator::Discriminator;
pub use generator::{
    fuse, Decoder, EncoderNames, Generator, GeneratorInput, GeneratorOutput, MfccEncoder, MotionEncoder, SpeakerCode,
    SpeakerEncoder, TextEncoder,
};
pub use params::{Bind, ParamSet};
pub use phoneme::PhonemePredictor;
pub use text::Vocabulary;

use crate::error::{Error, Result};
use crate::graphs::{
    build_face_anatomy_graph, build_face_landmark_graph, build_pose_anatomy_graph, build_pose_graph, AcGraph,
    CollationPlan,
};
use crate::motion::{FaceLayout, PoseLayout, ReferenceFace, SEED_FRAMES, WINDOW_FRAMES};

/// Latent widths of every encoder. `h` is the fused width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionPlan {
    pub d_a: usize,
    pub d_w: usize,
    pub d_k: usize,
    pub d_f: usize,
    pub d_l: usize,
    pub d_l_tilde: usize,
    pub d_u: usize,
    pub d_v: usize,
    pub d_v_tilde: usize,
    pub h: usize,
}

#[derive(Deserialize)]
struct PlanRepr {
    d_a: usize,
    d_w: usize,
    d_k: usize,
    d_f: usize,
    d_l: usize,
    d_l_tilde: usize,
    d_u: usize,
    d_v: usize,
    d_v_tilde: usize,
    h: Option<usize>,
}

impl<'de> Deserialize<'de> for DimensionPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PlanRepr::deserialize(d)?;
        let plan = DimensionPlan::new(
            r.d_a,
            r.d_w,
            r.d_k,
            r.d_f,
            r.d_l,
            r.d_l_tilde,
            r.d_u,
            r.d_v,
            r.d_v_tilde,
        )
        .map_err(serde::de::Error::custom)?;
        if let Some(h) = r.h {
            if h != plan.h {
                return Err(serde::de::Error::custom(format!(
                    "h = {h} but the latent widths sum to {}",
                    plan.h
                )));
            }
        }
        Ok(plan)
    }
}

impl DimensionPlan {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d_a: usize,
        d_w: usize,
        d_k: usize,
        d_f: usize,
        d_l: usize,
        d_l_tilde: usize,
        d_u: usize,
        d_v: usize,
        d_v_tilde: usize,
    ) -> Result<Self> {
        let all = [d_a, d_w, d_k, d_f, d_l, d_l_tilde, d_u, d_v, d_v_tilde];
        if all.contains(&0) {
            return Err(Error::InvalidConfig("latent widths must be positive".into()));
        }
        Ok(Self {
            d_a,
            d_w,
            d_k,
            d_f,
            d_l,
            d_l_tilde,
            d_u,
            d_v,
            d_v_tilde,
            h: d_a + d_w + d_k + d_l_tilde + d_v_tilde,
        })
    }

    /// Every width equal to `d`.
    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(d, d, d, d, d, d, d, d, d)
    }

    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(
            self.d_a,
            self.d_w,
            self.d_k,
            self.d_f,
            self.d_l,
            self.d_l_tilde,
            self.d_u,
            self.d_v,
            self.d_v_tilde,
        )?;
        if fresh.h != self.h {
            return Err(Error::InvalidConfig(format!(
                "h = {} but the latent widths sum to {}",
                self.h, fresh.h
            )));
        }
        Ok(())
    }
}

impl Default for DimensionPlan {
    fn default() -> Self {
        Self::new(32, 32, 8, 8, 32, 32, 32, 32, 32).expect("positive widths")
    }
}

/// Layer counts and sizes not covered by [`DimensionPlan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    /// Graph blocks per spatial-temporal graph network.
    pub graph_depth: usize,
    /// Temporal half-window τ of every graph.
    pub temporal_window: usize,
    /// Cross-component nearest pairs in the landmark graph.
    pub k_nearest: usize,
    /// Kernel of the plain temporal convolutions.
    pub conv_kernel: usize,
    pub decoder_hidden: usize,
    pub discriminator_hidden: usize,
    pub phoneme_channels: usize,
    /// Embedding rows reserved for out-of-vocabulary words.
    pub hash_buckets: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            graph_depth: 3,
            temporal_window: crate::graphs::DEFAULT_TEMPORAL_WINDOW,
            k_nearest: 1,
            conv_kernel: 3,
            decoder_hidden: 64,
            discriminator_hidden: 32,
            phoneme_channels: 64,
            hash_buckets: 64,
        }
    }
}

impl ArchConfig {
    /// Tiny sizes for gradient checks.
    pub fn miniature() -> Self {
        Self {
            graph_depth: 2,
            decoder_hidden: 4,
            discriminator_hidden: 4,
            phoneme_channels: 4,
            hash_buckets: 3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph_depth == 0
            || self.conv_kernel % 2 == 0
            || self.decoder_hidden == 0
            || self.discriminator_hidden == 0
            || self.phoneme_channels == 0
            || self.hash_buckets == 0
        {
            return Err(Error::InvalidConfig("invalid architecture sizes".into()));
        }
        Ok(())
    }
}

/// Everything needed to rebuild the networks: sizes, layouts and graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub plan: DimensionPlan,
    pub arch: ArchConfig,
    pub frames: usize,
    pub seed_frames: usize,
    pub speakers: usize,
    pub mfcc_dim: usize,
    pub mel_bands: usize,
    pub face: FaceLayout,
    pub pose: PoseLayout,
    pub face_graph: AcGraph,
    pub face_anatomy: AcGraph,
    pub pose_graph: AcGraph,
    pub pose_anatomy: AcGraph,
    pub vocabulary: Vocabulary,
}

impl NetworkSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        plan: DimensionPlan,
        arch: ArchConfig,
        face: FaceLayout,
        pose: PoseLayout,
        template: &ReferenceFace,
        speakers: usize,
        mfcc_dim: usize,
        mel_bands: usize,
        vocabulary: Vocabulary,
    ) -> Result<Self> {
        plan.validate()?;
        arch.validate()?;
        face.validate()?;
        pose.validate()?;
        if speakers == 0 || mfcc_dim == 0 || mel_bands == 0 {
            return Err(Error::InvalidConfig(
                "speakers and feature widths must be positive".into(),
            ));
        }
        let face_graph = build_face_landmark_graph(template, &face.partition, arch.temporal_window, arch.k_nearest)?;
        let face_anatomy = build_face_anatomy_graph(&face.partition, arch.temporal_window);
        let pose_graph = build_pose_graph(&pose.skeleton, arch.temporal_window);
        let pose_anatomy = build_pose_anatomy_graph(arch.temporal_window);
        Ok(Self {
            plan,
            arch,
            frames: WINDOW_FRAMES,
            seed_frames: SEED_FRAMES,
            speakers,
            mfcc_dim,
            mel_bands,
            face,
            pose,
            face_graph,
            face_anatomy,
            pose_graph,
            pose_anatomy,
            vocabulary,
        })
    }

    /// All widths 4 on the eight-landmark, five-joint layouts.
    pub fn miniature() -> Self {
        let face = FaceLayout::miniature();
        let template = ReferenceFace {
            positions: (0..face.landmarks())
                .map(|i| {
                    let a = i as f64 * 0.8;
                    [40.0 * a.cos(), 30.0 * a.sin(), 5.0 * (i % 3) as f64]
                })
                .collect(),
        };
        Self::new(
            DimensionPlan::uniform(4).expect("positive"),
            ArchConfig::miniature(),
            face,
            PoseLayout::miniature(),
            &template,
            3,
            4,
            4,
            Vocabulary::new(["hello", "world"], 3),
        )
        .expect("static miniature spec")
    }

    pub fn landmarks(&self) -> usize {
        self.face.landmarks()
    }

    pub fn bones(&self) -> usize {
        self.pose.skeleton.bones()
    }

    pub fn lips(&self) -> usize {
        self.face.lips.len()
    }

    pub fn face_collation(&self) -> CollationPlan {
        CollationPlan::from_partition(&self.face.partition).expect("validated partition")
    }

    pub fn pose_collation(&self) -> CollationPlan {
        CollationPlan::from_partition(&self.pose.partition).expect("validated partition")
    }

    /// Hard error unless `other` describes the same networks.
    pub fn check_matches(&self, other: &NetworkSpec) -> Result<()> {
        if self.plan != other.plan {
            return Err(Error::CheckpointMismatch(format!(
                "dimension plan {:?} differs from {:?}",
                other.plan, self.plan
            )));
        }
        if self != other {
            return Err(Error::CheckpointMismatch("network layout differs".into()));
        }
        Ok(())
    }
}
