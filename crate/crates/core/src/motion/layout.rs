//! Default landmark layout and upper-body skeleton.

use serde::{Deserialize, Serialize};

use super::types::Skeleton;
use crate::error::{Error, Result};
use crate::graphs::ComponentPartition;

pub const DEFAULT_LANDMARKS: usize = 68;
pub const DEFAULT_JOINTS: usize = 10;

/// Landmark partition plus the lip subsets used for lip superposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceLayout {
    pub partition: ComponentPartition,
    /// Landmarks predicted by the phoneme predictor, in output order.
    pub lips: Vec<usize>,
    /// Lip corners whose generator offsets drive the superposed lip shape.
    pub lip_corners: Vec<usize>,
}

impl FaceLayout {
    pub fn landmarks(&self) -> usize {
        self.partition.node_count()
    }

    /// Checks index ranges and that no landmark is listed twice.
    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        let l = self.landmarks();
        let mut seen = vec![false; l];
        for &i in &self.lips {
            if i >= l {
                return Err(Error::InvalidConfig(format!("lip landmark {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::IndexOverlap(i));
            }
        }
        let mut corner_seen = vec![false; l];
        for &c in &self.lip_corners {
            if c >= l || !seen[c] {
                return Err(Error::InvalidConfig(format!("lip corner {c} is not a lip landmark")));
            }
            if std::mem::replace(&mut corner_seen[c], true) {
                return Err(Error::IndexOverlap(c));
            }
        }
        if self.lip_corners.is_empty() {
            return Err(Error::InvalidConfig("no lip corners".into()));
        }
        Ok(())
    }

    /// 68-point layout: eyes with brows, nose, lips, jaw contour.
    pub fn default_68() -> Self {
        let eyes: Vec<usize> = (17..=26).chain(36..=47).collect();
        let nose: Vec<usize> = (27..=35).collect();
        let lips: Vec<usize> = (48..=67).collect();
        let jaw: Vec<usize> = (0..=16).collect();
        let partition = ComponentPartition::from_groups(&[eyes, nose, lips.clone(), jaw], DEFAULT_LANDMARKS)
            .expect("static layout")
            .with_names(&["eyes", "nose", "lips", "lower_jaw"]);
        Self {
            partition,
            lips,
            lip_corners: vec![48, 54],
        }
    }

    /// Eight-landmark layout for miniature tests.
    pub fn miniature() -> Self {
        let partition = ComponentPartition::from_groups(&[vec![0, 1], vec![2], vec![3, 4, 5, 6], vec![7]], 8)
            .expect("static layout")
            .with_names(&["eyes", "nose", "lips", "lower_jaw"]);
        Self {
            partition,
            lips: vec![3, 4, 5, 6],
            lip_corners: vec![3, 5],
        }
    }
}

/// Skeleton plus the torso / left-arm / right-arm partition of its bones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseLayout {
    pub skeleton: Skeleton,
    pub partition: ComponentPartition,
}

impl PoseLayout {
    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        if self.partition.node_count() != self.skeleton.bones() {
            return Err(Error::shape("pose partition must cover every bone"));
        }
        if self.partition.component_count != 3 {
            return Err(Error::InvalidConfig("pose partition needs torso and two arms".into()));
        }
        Ok(())
    }

    /// Ten joints: root, spine, neck, head, then shoulder-elbow-wrist for the
    /// left and right arm, in millimetres.
    pub fn default_upper_body() -> Self {
        let up = [0.0, 1.0, 0.0];
        let down = [0.0, -1.0, 0.0];
        let skeleton = Skeleton::new(
            vec![
                None,
                Some(0),
                Some(1),
                Some(2),
                Some(2),
                Some(4),
                Some(5),
                Some(2),
                Some(7),
                Some(8),
            ],
            vec![250.0, 200.0, 120.0, 180.0, 280.0, 250.0, 180.0, 280.0, 250.0],
            vec![up, up, up, [1.0, 0.0, 0.0], down, down, [-1.0, 0.0, 0.0], down, down],
        )
        .expect("static skeleton");
        let partition = ComponentPartition::from_groups(&[vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]], 9)
            .expect("static layout")
            .with_names(&["torso", "left_arm", "right_arm"]);
        Self { skeleton, partition }
    }

    /// Five joints: root, neck, head, left hand, right hand.
    pub fn miniature() -> Self {
        let skeleton = Skeleton::new(
            vec![None, Some(0), Some(1), Some(1), Some(1)],
            vec![300.0, 150.0, 400.0, 400.0],
            vec![[0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [1.0, -0.5, 0.0], [-1.0, -0.5, 0.0]],
        )
        .expect("static skeleton");
        let partition = ComponentPartition::from_groups(&[vec![0, 1], vec![2], vec![3]], 4)
            .expect("static layout")
            .with_names(&["torso", "left_arm", "right_arm"]);
        Self { skeleton, partition }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layouts_valid() {
        let f = FaceLayout::default_68();
        f.validate().unwrap();
        assert_eq!(f.partition.component_count, 4);
        assert_eq!(f.lips.len(), 20);
        PoseLayout::default_upper_body().validate().unwrap();
        FaceLayout::miniature().validate().unwrap();
        PoseLayout::miniature().validate().unwrap();
        assert_eq!(PoseLayout::miniature().skeleton.joints(), 5);
    }

    #[test]
    fn duplicate_lip_index() {
        let mut f = FaceLayout::miniature();
        f.lips.push(3);
        assert_eq!(f.validate(), Err(Error::IndexOverlap(3)));
        let mut f = FaceLayout::miniature();
        f.lip_corners = vec![3, 3];
        assert_eq!(f.validate(), Err(Error::IndexOverlap(3)));
    }
}
