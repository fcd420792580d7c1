use std::sync::Arc;

use rand::Rng;

use super::params::{Bind, ParamSet};
use crate::autodiff::{Tape, Var};
use crate::graphs::AcGraph;

/// Leaky-rectifier slope used by every hidden layer.
pub const LEAKY_SLOPE: f64 = 0.2;

fn leaky(tape: &mut Tape, x: Var) -> Var {
    tape.leaky_relu(x, LEAKY_SLOPE)
}

/// Affine map on the last axis.
#[derive(Clone, Debug)]
pub struct Linear {
    name: String,
    pub cin: usize,
    pub cout: usize,
}

impl Linear {
    pub fn new(name: impl Into<String>, cin: usize, cout: usize) -> Self {
        Self {
            name: name.into(),
            cin,
            cout,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        ps.init_weight(&format!("{}/w", self.name), vec![self.cin, self.cout], rng);
        ps.init_zeros(&format!("{}/b", self.name), vec![self.cout]);
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let w = b.var(tape, &format!("{}/w", self.name));
        let bias = b.var(tape, &format!("{}/b", self.name));
        let y = tape.matmul(x, w);
        tape.add_bias(y, bias)
    }

    pub fn forward_act(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let y = self.forward(tape, b, x);
        leaky(tape, y)
    }
}

/// Same-length convolution along the first (time) axis of `[T, R, C]`.
#[derive(Clone, Debug)]
pub struct TemporalConv {
    name: String,
    pub kernel: usize,
    pub cin: usize,
    pub cout: usize,
}

impl TemporalConv {
    pub fn new(name: impl Into<String>, kernel: usize, cin: usize, cout: usize) -> Self {
        assert!(kernel % 2 == 1, "temporal kernel must be odd");
        Self {
            name: name.into(),
            kernel,
            cin,
            cout,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        ps.init_weight(&format!("{}/w", self.name), vec![self.kernel, self.cin, self.cout], rng);
        ps.init_zeros(&format!("{}/b", self.name), vec![self.cout]);
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let w = b.var(tape, &format!("{}/w", self.name));
        let bias = b.var(tape, &format!("{}/b", self.name));
        tape.temporal_conv(x, w, bias)
    }

    /// Convolve a `[T, C]` sequence.
    pub fn forward_seq(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let t = tape.shape(x)[0];
        let x3 = tape.reshape(x, vec![t, 1, self.cin]);
        let y = self.forward(tape, b, x3);
        tape.reshape(y, vec![t, self.cout])
    }
}

/// One spatial-temporal graph block: normalized-adjacency aggregation, a
/// shared channel map, then a temporal convolution over `2τ + 1` frames.
#[derive(Clone, Debug)]
pub struct GraphBlock {
    adjacency: Arc<[f64]>,
    nodes: usize,
    spatial: Linear,
    temporal: TemporalConv,
}

impl GraphBlock {
    pub fn new(name: &str, graph: &AcGraph, cin: usize, cout: usize) -> Self {
        Self {
            adjacency: graph.adjacency.clone().into(),
            nodes: graph.node_count,
            spatial: Linear::new(format!("{name}/gcn"), cin, cout),
            temporal: TemporalConv::new(format!("{name}/tcn"), graph.temporal_kernel(), cout, cout),
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        self.spatial.init(ps, rng);
        self.temporal.init(ps, rng);
    }

    /// `[T, N, Cin] → [T, N, Cout]`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        let mixed = tape.node_mix(x, self.adjacency.clone(), self.nodes);
        let h = self.spatial.forward_act(tape, b, mixed);
        let y = self.temporal.forward(tape, b, h);
        leaky(tape, y)
    }
}

/// A stack of graph blocks on one graph.
#[derive(Clone, Debug)]
pub struct Stgcn {
    blocks: Vec<GraphBlock>,
    pub cin: usize,
    pub cout: usize,
}

impl Stgcn {
    pub fn new(name: &str, graph: &AcGraph, cin: usize, cout: usize, depth: usize) -> Self {
        assert!(depth > 0);
        let blocks = (0..depth)
            .map(|i| {
                let c_in = if i == 0 { cin } else { cout };
                GraphBlock::new(&format!("{name}/{i}"), graph, c_in, cout)
            })
            .collect();
        Self { blocks, cin, cout }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        for blk in &self.blocks {
            blk.init(ps, rng);
        }
    }

    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, mut x: Var) -> Var {
        for blk in &self.blocks {
            x = blk.forward(tape, b, x);
        }
        x
    }
}

/// Temporal map from `t_in` to `t_out` frames: a transposed convolution
/// when upsampling, a same-length convolution otherwise.
#[derive(Clone, Debug)]
pub enum TimeMap {
    Upsample {
        name: String,
        stride: usize,
        kernel: usize,
        channels: usize,
    },
    Same(TemporalConv),
}

impl TimeMap {
    pub fn new(name: &str, t_in: usize, t_out: usize, channels: usize, kernel: usize) -> Self {
        assert!(t_in > 0 && t_out >= t_in, "cannot map {t_in} frames to {t_out}");
        if t_in == t_out {
            return TimeMap::Same(TemporalConv::new(name, kernel, channels, channels));
        }
        let stride = if t_in == 1 { 1 } else { (t_out / t_in).max(1) };
        let kernel = t_out - (t_in - 1) * stride;
        TimeMap::Upsample {
            name: name.to_string(),
            stride,
            kernel,
            channels,
        }
    }

    pub fn init(&self, ps: &mut ParamSet, rng: &mut impl Rng) {
        match self {
            TimeMap::Upsample {
                name, kernel, channels, ..
            } => {
                ps.init_weight(&format!("{name}/w"), vec![*kernel, *channels, *channels], rng);
                ps.init_zeros(&format!("{name}/b"), vec![*channels]);
            }
            TimeMap::Same(c) => c.init(ps, rng),
        }
    }

    /// `[t_in, C] → [t_out, C]`.
    pub fn forward(&self, tape: &mut Tape, b: &mut Bind, x: Var) -> Var {
        match self {
            TimeMap::Upsample { name, stride, .. } => {
                let w = b.var(tape, &format!("{name}/w"));
                let bias = b.var(tape, &format!("{name}/b"));
                tape.conv_transpose(x, w, bias, *stride)
            }
            TimeMap::Same(c) => c.forward_seq(tape, b, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use rand::SeedableRng;

    #[test]
    fn time_map_lengths() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for (tin, tout) in [(4, 34), (34, 34), (1, 7), (3, 10)] {
            let m = TimeMap::new("m", tin, tout, 2, 3);
            let mut ps = ParamSet::new();
            m.init(&mut ps, &mut rng);
            let mut tape = Tape::new();
            let mut b = Bind::trainable(&ps);
            let x = tape.constant(Tensor::new(vec![tin, 2], vec![1.0; tin * 2]));
            let y = m.forward(&mut tape, &mut b, x);
            assert_eq!(tape.shape(y), &[tout, 2]);
        }
    }
}
