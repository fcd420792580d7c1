use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::autodiff::{Gradients, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Named parameter tensors of one network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Zeros with the same names and shapes.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape.clone())))
                .collect(),
        }
    }

    /// FNV-1a over names, shapes and value bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for (k, t) in &self.tensors {
            eat(k.as_bytes());
            for s in &t.shape {
                eat(&(*s as u64).to_le_bytes());
            }
            for v in &t.data {
                eat(&v.to_bits().to_le_bytes());
            }
        }
        h
    }

    /// Same names and shapes as `other`.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<()> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::CheckpointMismatch(format!(
                "{} parameter tensors, expected {}",
                self.tensors.len(),
                other.tensors.len()
            )));
        }
        for ((ka, ta), (kb, tb)) in self.tensors.iter().zip(&other.tensors) {
            if ka != kb || ta.shape != tb.shape {
                return Err(Error::CheckpointMismatch(format!(
                    "parameter {ka} {:?} does not match {kb} {:?}",
                    ta.shape, tb.shape
                )));
            }
        }
        Ok(())
    }

    /// Glorot-uniform weight of the given shape; fan-in is the product of all
    /// but the last axis.
    pub fn init_weight(&mut self, name: &str, shape: Vec<usize>, rng: &mut impl Rng) {
        let fan_out = *shape.last().expect("non-scalar weight");
        let fan_in: usize = shape[..shape.len() - 1].iter().product();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
        self.insert(name, Tensor::new(shape, data));
    }

    pub fn init_zeros(&mut self, name: &str, shape: Vec<usize>) {
        self.insert(name, Tensor::zeros(shape));
    }
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    data: String,
}

impl Serialize for ParamSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let stored: BTreeMap<&String, StoredTensor> = self
            .tensors
            .iter()
            .map(|(k, t)| {
                let bytes: Vec<u8> = t.data.iter().flat_map(|v| v.to_le_bytes()).collect();
                (
                    k,
                    StoredTensor {
                        shape: t.shape.clone(),
                        data: B64.encode(bytes),
                    },
                )
            })
            .collect();
        stored.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let stored = BTreeMap::<String, StoredTensor>::deserialize(d)?;
        let mut tensors = BTreeMap::new();
        for (k, st) in stored {
            let bytes = B64.decode(st.data.as_bytes()).map_err(D::Error::custom)?;
            if bytes.len() % 8 != 0 {
                return Err(D::Error::custom(format!("tensor {k}: truncated data")));
            }
            let data: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            if st.shape.iter().product::<usize>() != data.len() {
                return Err(D::Error::custom(format!("tensor {k}: shape does not match data")));
            }
            tensors.insert(k, Tensor::new(st.shape, data));
        }
        Ok(Self { tensors })
    }
}

/// Binds parameters of one [`ParamSet`] onto a tape on first use.
/// Frozen bindings record constants, so no gradient flows into them.
pub struct Bind<'p> {
    params: &'p ParamSet,
    vars: BTreeMap<&'p str, Var>,
    trainable: bool,
}

impl<'p> Bind<'p> {
    pub fn trainable(params: &'p ParamSet) -> Self {
        Self {
            params,
            vars: BTreeMap::new(),
            trainable: true,
        }
    }

    pub fn frozen(params: &'p ParamSet) -> Self {
        Self {
            params,
            vars: BTreeMap::new(),
            trainable: false,
        }
    }

    pub fn var(&mut self, tape: &mut Tape, name: &str) -> Var {
        let (key, t) = self
            .params
            .tensors
            .get_key_value(name)
            .unwrap_or_else(|| panic!("parameter {name} missing"));
        if let Some(v) = self.vars.get(key.as_str()) {
            return *v;
        }
        let v = if self.trainable {
            tape.param(t.clone())
        } else {
            tape.constant(t.clone())
        };
        self.vars.insert(key.as_str(), v);
        v
    }

    /// Gradient for every parameter (zeros for unused ones).
    pub fn gradients(&self, grads: &mut Gradients) -> ParamSet {
        let mut out = self.params.zeros_like();
        for (name, v) in &self.vars {
            if let Some(g) = grads.take(*v) {
                out.get_mut(name).expect("bound parameter").data = g;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn roundtrip_and_fingerprint() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut p = ParamSet::new();
        p.init_weight("a/w", vec![3, 4], &mut rng);
        p.init_zeros("a/b", vec![4]);
        let s = serde_json::to_string(&p).unwrap();
        let q: ParamSet = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.fingerprint(), q.fingerprint());
        q.check_compatible(&p).unwrap();
        let mut r = q.clone();
        r.get_mut("a/b").unwrap().data[0] = 1e-300;
        assert_ne!(p.fingerprint(), r.fingerprint());
    }

    #[test]
    fn frozen_binding_has_no_gradient() {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::new(vec![2], vec![1.0, 2.0]));
        let mut tape = Tape::new();
        let mut b = Bind::frozen(&p);
        let x = b.var(&mut tape, "x");
        let s = tape.sum(x);
        let mut g = tape.backward(s);
        assert!(b.gradients(&mut g).get("x").unwrap().data.iter().all(|v| *v == 0.0));

        let mut tape = Tape::new();
        let mut b = Bind::trainable(&p);
        let x = b.var(&mut tape, "x");
        let x2 = b.var(&mut tape, "x");
        assert_eq!(x, x2);
        let s = tape.sum(x);
        let mut g = tape.backward(s);
        assert_eq!(b.gradients(&mut g).get("x").unwrap().data, vec![1.0, 1.0]);
    }
}
