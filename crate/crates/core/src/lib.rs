//! Synchronous co-speech synthesis of 3-D face landmarks and upper-body poses.

pub mod audio;
pub mod autodiff;
pub mod error;
pub mod graphs;
pub mod metrics;
pub mod motion;
pub mod net;
pub mod retarget;
pub mod train;

pub use error::{Error, Result};
