//! Clip data model and the deterministic preprocessing chain: rigid view
//! normalization, anchor resampling, chunking, and the face-delta and
//! bone-unit-vector representations.

mod align;
mod chunk;
mod layout;
mod repr;
mod resample;
mod types;

pub use align::{umeyama_fit, view_normalize, RigidTransform};
pub use chunk::{chunk, window_offsets, ChunkConfig, MotionWindow, DEFAULT_STRIDE, SEED_FRAMES, WINDOW_FRAMES};
pub use layout::{FaceLayout, PoseLayout, DEFAULT_JOINTS, DEFAULT_LANDMARKS};
pub use repr::{
    bbox_diagonal, deltas_to_face, face_to_deltas, pose_to_units, scale_points, scale_to_unit_bbox, unit_bbox_scale,
    units_to_pose,
};
pub use resample::{anchor_resample, anchor_resample_points, catmull_rom_weights, ANCHOR_RATE, NATIVE_RATE};
pub(crate) use types::{norm3, sub3};
pub use types::{
    one_hot, Audio, FaceDeltaSequence, FaceLandmarkSequence, MotionSample, PointSeq, PoseJointSequence,
    PoseUnitSequence, ReferenceFace, Skeleton, Transcript, Word,
};
