//! Anatomical-component graphs for faces and poses and the collation plans
//! that pool node features into component features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{ReferenceFace, Skeleton};

pub const DEFAULT_TEMPORAL_WINDOW: usize = 2;

/// Assignment of every node to exactly one anatomical component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPartition {
    pub component_of: Vec<usize>,
    pub component_count: usize,
    #[serde(default)]
    pub names: Vec<String>,
}

impl ComponentPartition {
    /// Build from member lists. Every node in `0..node_count` must appear once.
    pub fn from_groups(groups: &[Vec<usize>], node_count: usize) -> Result<Self> {
        let mut component_of = vec![usize::MAX; node_count];
        for (c, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::EmptyComponent(c));
            }
            for &n in g {
                if n >= node_count || component_of[n] != usize::MAX {
                    return Err(Error::InvalidConfig(format!(
                        "node {n} is out of range or assigned twice"
                    )));
                }
                component_of[n] = c;
            }
        }
        if let Some(n) = component_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidConfig(format!("node {n} has no component")));
        }
        Ok(Self {
            component_of,
            component_count: groups.len(),
            names: Vec::new(),
        })
    }

    pub fn with_names(mut self, names: &[&str]) -> Self {
        self.names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn node_count(&self) -> usize {
        self.component_of.len()
    }

    /// Ascending member lists, one per component.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.component_count];
        for (n, &c) in self.component_of.iter().enumerate() {
            g[c].push(n);
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        for (c, g) in self.groups().iter().enumerate() {
            if g.is_empty() {
                return Err(Error::EmptyComponent(c));
            }
        }
        if self.component_of.iter().any(|&c| c >= self.component_count) {
            return Err(Error::InvalidConfig("component id out of range".into()));
        }
        Ok(())
    }
}

/// Spatial graph with a temporal neighbourhood of `temporal_window` frames on
/// each side. `adjacency` holds `D^{-1/2}(A + I)D^{-1/2}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcGraph {
    pub node_count: usize,
    pub spatial_edges: Vec<(usize, usize)>,
    pub temporal_window: usize,
    pub adjacency: Vec<f64>,
}

impl AcGraph {
    pub fn from_edges(node_count: usize, edges: Vec<(usize, usize)>, temporal_window: usize) -> Self {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let n = node_count;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        for &(i, j) in &edges {
            a[i * n + j] = 1.0;
            a[j * n + i] = 1.0;
        }
        let deg: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum()).collect();
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] /= (deg[i] * deg[j]).sqrt();
            }
        }
        Self {
            node_count,
            spatial_edges: edges,
            temporal_window,
            adjacency: a,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.spatial_edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.spatial_edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn degree(&self, n: usize) -> usize {
        self.spatial_edges.iter().filter(|&&(a, b)| a == n || b == n).count()
    }

    /// Temporal kernel length `2τ + 1`.
    pub fn temporal_kernel(&self) -> usize {
        2 * self.temporal_window + 1
    }

    /// Relabel nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let edges = self.spatial_edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Self::from_edges(self.node_count, edges, self.temporal_window)
    }
}

/// Node lists per component, zero-padded to the largest component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollationPlan {
    pub components: Vec<Vec<usize>>,
    pub pad_to: usize,
}

impl CollationPlan {
    pub fn from_partition(p: &ComponentPartition) -> Result<Self> {
        p.validate()?;
        Self::from_components(p.groups())
    }

    pub fn from_components(components: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(c) = components.iter().position(Vec::is_empty) {
            return Err(Error::EmptyComponent(c));
        }
        let pad_to = components.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { components, pad_to })
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    /// For each output slot `(component, member slot, channel)`, the source
    /// `(node, channel)` flat index into a `nodes × dim` frame, or `None` for padding.
    pub fn gather_index(&self, dim: usize) -> Vec<Option<usize>> {
        let mut idx = Vec::with_capacity(self.components.len() * self.pad_to * dim);
        for comp in &self.components {
            for slot in 0..self.pad_to {
                for c in 0..dim {
                    idx.push(comp.get(slot).map(|&n| n * dim + c));
                }
            }
        }
        idx
    }
}

/// Pool `frames × nodes × dim` features into `frames × components × (pad_to·dim)`.
pub fn collate(features: &[f64], frames: usize, dim: usize, plan: &CollationPlan) -> Result<Vec<f64>> {
    let nodes = plan.node_count();
    if features.len() != frames * nodes * dim {
        return Err(Error::shape(format!(
            "features have {} values, plan expects {frames}x{nodes}x{dim}",
            features.len()
        )));
    }
    let idx = plan.gather_index(dim);
    let per = nodes * dim;
    let mut out = Vec::with_capacity(frames * idx.len());
    for t in 0..frames {
        let f = &features[t * per..(t + 1) * per];
        out.extend(idx.iter().map(|i| i.map_or(0.0, |i| f[i])));
    }
    Ok(out)
}

/// Inverse scatter of [`collate`].
pub fn decollate(collated: &[f64], frames: usize, dim: usize, plan: &CollationPlan) -> Result<Vec<f64>> {
    let idx = plan.gather_index(dim);
    if collated.len() != frames * idx.len() {
        return Err(Error::shape("collated feature size does not match plan"));
    }
    let per = plan.node_count() * dim;
    let mut out = vec![0.0; frames * per];
    for t in 0..frames {
        for (k, i) in idx.iter().enumerate() {
            if let Some(i) = i {
                out[t * per + i] = collated[t * idx.len() + k];
            }
        }
    }
    Ok(out)
}

/// Landmark graph: complete within each component plus the `k_nearest`
/// closest cross-component pairs (on the template) for every component pair.
pub fn build_face_landmark_graph(
    template: &ReferenceFace,
    partition: &ComponentPartition,
    temporal_window: usize,
    k_nearest: usize,
) -> Result<AcGraph> {
    let l = template.landmarks();
    if partition.node_count() != l {
        return Err(Error::shape(format!(
            "partition covers {} nodes, template has {l} landmarks",
            partition.node_count()
        )));
    }
    partition.validate()?;
    let groups = partition.groups();
    let mut edges = Vec::new();
    for g in &groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                edges.push((i, j));
            }
        }
    }
    let dist2 = |i: usize, j: usize| -> f64 {
        let (p, q) = (template.positions[i], template.positions[j]);
        (0..3).map(|k| (p[k] - q[k]).powi(2)).sum()
    };
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let mut pairs: Vec<(f64, usize, usize)> = groups[a]
                .iter()
                .flat_map(|&i| groups[b].iter().map(move |&j| (i, j)))
                .map(|(i, j)| (dist2(i, j), i.min(j), i.max(j)))
                .collect();
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            edges.extend(pairs.iter().take(k_nearest).map(|&(_, i, j)| (i, j)));
        }
    }
    Ok(AcGraph::from_edges(l, edges, temporal_window))
}

/// Fully connected graph over the face components.
pub fn build_face_anatomy_graph(partition: &ComponentPartition, temporal_window: usize) -> AcGraph {
    let n = partition.component_count;
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    AcGraph::from_edges(n, edges, temporal_window)
}

/// Bone graph: bones are adjacent when they are within distance 2 in the
/// bone-incidence graph (sharing a joint, or linked through a third bone).
pub fn build_pose_graph(skel: &Skeleton, temporal_window: usize) -> AcGraph {
    let nb = skel.bones();
    let touch = |a: usize, b: usize| {
        let (s1, d1) = skel.bone_joints(a);
        let (s2, d2) = skel.bone_joints(b);
        s1 == s2 || s1 == d2 || d1 == s2 || d1 == d2
    };
    let mut edges = Vec::new();
    for a in 0..nb {
        for b in a + 1..nb {
            if touch(a, b) || (0..nb).any(|c| c != a && c != b && touch(a, c) && touch(c, b)) {
                edges.push((a, b));
            }
        }
    }
    AcGraph::from_edges(nb, edges, temporal_window)
}

pub const POSE_TORSO: usize = 0;
pub const POSE_LEFT_ARM: usize = 1;
pub const POSE_RIGHT_ARM: usize = 2;

/// Torso, left arm, right arm; both arms touch the torso but not each other.
pub fn build_pose_anatomy_graph(temporal_window: usize) -> AcGraph {
    AcGraph::from_edges(
        3,
        vec![(POSE_TORSO, POSE_LEFT_ARM), (POSE_TORSO, POSE_RIGHT_ARM)],
        temporal_window,
    )
}

/// JSON-friendly description used for inspection and golden files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDescription {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub partition: Option<Vec<usize>>,
    pub temporal_window: usize,
}

impl GraphDescription {
    pub fn new(graph: &AcGraph, partition: Option<&ComponentPartition>) -> Self {
        Self {
            nodes: graph.node_count,
            edges: graph.spatial_edges.clone(),
            partition: partition.map(|p| p.component_of.clone()),
            temporal_window: graph.temporal_window,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_graph(&self) -> AcGraph {
        AcGraph::from_edges(self.nodes, self.edges.clone(), self.temporal_window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn square() -> (ReferenceFace, ComponentPartition) {
        // Component A on the left edge, B on the right; 0–2 and 1–3 are the
        // closest cross pairs at distance 1, tie broken by index.
        let t = ReferenceFace {
            positions: vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
        };
        let p = ComponentPartition::from_groups(&[vec![0, 1], vec![2, 3]], 4).unwrap();
        (t, p)
    }

    #[test]
    fn square_two_components() {
        let (t, p) = square();
        let g = build_face_landmark_graph(&t, &p, 2, 1).unwrap();
        // Hand enumeration: intra {0-1, 2-3}, cross nearest {0-2}.
        let e: BTreeSet<_> = g.spatial_edges.iter().cloned().collect();
        assert_eq!(e, BTreeSet::from([(0, 1), (2, 3), (0, 2)]));
    }

    #[test]
    fn single_component_complete() {
        let t = ReferenceFace {
            positions: (0..5).map(|i| [i as f64, (i * i) as f64, 0.0]).collect(),
        };
        let p = ComponentPartition::from_groups(&[vec![0, 1, 2, 3, 4]], 5).unwrap();
        let g = build_face_landmark_graph(&t, &p, 0, 1).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn window_zero_is_spatial_plus_self_loops() {
        let (t, p) = square();
        let g0 = build_face_landmark_graph(&t, &p, 0, 1).unwrap();
        let g2 = build_face_landmark_graph(&t, &p, 2, 1).unwrap();
        assert_eq!(g0.adjacency, g2.adjacency);
        assert_eq!(g0.temporal_kernel(), 1);
        let expect = AcGraph::from_edges(4, vec![(0, 1), (2, 3), (0, 2)], 0);
        assert_eq!(g0.adjacency, expect.adjacency);
    }

    #[test]
    fn empty_component_rejected() {
        assert_eq!(
            ComponentPartition::from_groups(&[vec![0], vec![]], 1),
            Err(Error::EmptyComponent(1))
        );
    }

    #[test]
    fn face_anatomy_complete() {
        let p = ComponentPartition::from_groups(&[vec![0], vec![1], vec![2], vec![3]], 4).unwrap();
        let g = build_face_anatomy_graph(&p, 2);
        assert_eq!(g.edge_count(), 6);
        let off: Vec<f64> = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g.adjacency[i * 4 + j])
            .collect();
        assert!(off.iter().all(|v| (v - off[0]).abs() < 1e-15));
        let p1 = ComponentPartition::from_groups(&[vec![0, 1]], 2).unwrap();
        let g1 = build_face_anatomy_graph(&p1, 2);
        assert_eq!(g1.edge_count(), 0);
        assert_eq!(g1.adjacency, vec![1.0]);
    }

    fn chain(bones: usize) -> Skeleton {
        let parents = (0..=bones).map(|j| j.checked_sub(1)).collect();
        Skeleton::new(parents, vec![1.0; bones], vec![[1.0, 0.0, 0.0]; bones]).unwrap()
    }

    #[test]
    fn pose_graph_chains() {
        let g = build_pose_graph(&chain(3), 2);
        assert_eq!(g.spatial_edges, vec![(0, 1), (0, 2), (1, 2)]);
        let g = build_pose_graph(&chain(2), 2);
        assert_eq!(g.spatial_edges, vec![(0, 1)]);
        // A 4-bone chain: b0 and b3 are three hops apart.
        let g = build_pose_graph(&chain(4), 2);
        assert!(!g.has_edge(0, 3));
        assert!(g.has_edge(1, 3));
    }

    #[test]
    fn pose_graph_star() {
        let s = Skeleton::new(
            vec![None, Some(0), Some(0), Some(0)],
            vec![1.0; 3],
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(build_pose_graph(&s, 0).spatial_edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn pose_anatomy() {
        let g = build_pose_anatomy_graph(2);
        assert_eq!(g.node_count, 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.adjacency[POSE_LEFT_ARM * 3 + POSE_RIGHT_ARM], 0.0);
        assert_eq!(g.degree(POSE_TORSO), 2);
    }

    #[test]
    fn collate_padding() {
        let plan = CollationPlan::from_components(vec![vec![0, 1], vec![2]]).unwrap();
        let f = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let c = collate(&f, 1, 2, &plan).unwrap();
        assert_eq!(c, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.0, 0.0]);
        assert_eq!(decollate(&c, 1, 2, &plan).unwrap(), f);
    }

    #[test]
    fn collate_equal_sizes_is_permutation() {
        let plan = CollationPlan::from_components(vec![vec![2, 0], vec![1, 3]]).unwrap();
        let f: Vec<f64> = (0..2 * 4 * 3).map(|v| v as f64 + 1.0).collect();
        let c = collate(&f, 2, 3, &plan).unwrap();
        let mut a = c.clone();
        let mut b = f.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        let s1: f64 = f.iter().map(|v| v.abs()).sum();
        let s2: f64 = c.iter().map(|v| v.abs()).sum();
        assert_eq!(s1, s2);
    }

    #[test]
    fn collate_shape_mismatch() {
        let plan = CollationPlan::from_components(vec![vec![0, 1]]).unwrap();
        assert!(matches!(collate(&[0.0; 3], 1, 2, &plan), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn description_round_trip() {
        let (t, p) = square();
        let g = build_face_landmark_graph(&t, &p, 2, 1).unwrap();
        let d = GraphDescription::new(&g, Some(&p));
        let back: GraphDescription = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(back.to_graph(), g);
    }
}
