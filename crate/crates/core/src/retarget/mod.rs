//! Joint rotations from positions, lip superposition and animation export.

mod export;
mod fabrik;
mod lips;
mod rotation;

pub use export::{
    export_animation, landmark_map, load_animation, write_landmark_map, AnimationDocument, LandmarkMapEntry,
    ANIMATION_FORMAT, ANIMATION_VERSION,
};
pub use fabrik::{fabrik_solve, reach, FabrikConfig, FabrikResult};
pub use lips::{superpose_lips, CombinedFaceSequence};
pub use rotation::{positions_to_rotations, rotations_to_positions, shortest_arc, JointRotationSequence};
