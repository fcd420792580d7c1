//! Central finite-difference checks of tape gradients.
//!
//! Leaky rectifiers and absolute values make the networks piecewise smooth.
//! A central difference whose two probes land in a different smooth piece
//! than the base point is not an estimate of the derivative, so such
//! entries are retried with smaller steps until both probes stay in the
//! base piece; entries that never do are counted in `kinked` and skipped.

use super::params::{Bind, ParamSet};
use crate::autodiff::{Tape, Tensor, Var};

/// Denominator floor of the relative error, so entries whose true gradient
/// is zero are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct GradReport {
    pub checked: usize,
    /// Entries that needed a step below the requested one.
    pub reduced_step: usize,
    /// Entries sitting on a kink at every tried step.
    pub kinked: usize,
    pub max_rel_error: f64,
    /// Entry with the largest error, as `(tensor, index, analytic, numeric)`.
    pub worst: Option<(String, usize, f64, f64)>,
}

impl GradReport {
    fn record(&mut self, name: &str, i: usize, a: f64, n: f64) {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR);
        self.checked += 1;
        if rel > self.max_rel_error || self.worst.is_none() {
            self.max_rel_error = self.max_rel_error.max(rel);
            self.worst = Some((name.to_string(), i, a, n));
        }
    }

    fn tally(&mut self, name: &str, i: usize, analytic: f64, est: Option<(f64, bool)>) {
        match est {
            Some((numeric, reduced)) => {
                self.reduced_step += usize::from(reduced);
                self.record(name, i, analytic, numeric);
            }
            None => self.kinked += 1,
        }
    }

    pub fn merge(&mut self, other: GradReport) {
        self.checked += other.checked;
        self.reduced_step += other.reduced_step;
        self.kinked += other.kinked;
        if other.max_rel_error >= self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst.or(self.worst.take());
        }
    }
}

/// Smallest step tried before an entry is declared kinked.
const MIN_STEP: f64 = 1e-9;

/// Central difference at `eps`, shrinking the step while either probe leaves
/// the base smooth piece. Returns the estimate and whether it was reduced.
fn probe(eps: f64, base_sig: u64, mut eval: impl FnMut(f64) -> (f64, u64)) -> Option<(f64, bool)> {
    let mut h = eps;
    while h >= MIN_STEP {
        let (up, su) = eval(h);
        let (down, sd) = eval(-h);
        if su == base_sig && sd == base_sig {
            return Some(((up - down) / (2.0 * h), h < eps));
        }
        h /= 10.0;
    }
    None
}

fn spread(len: usize, limit: usize) -> Vec<usize> {
    if len <= limit {
        return (0..len).collect();
    }
    let mut v: Vec<usize> = (0..limit).map(|k| k * (len - 1) / (limit - 1).max(1)).collect();
    v.dedup();
    v
}

/// Checks gradients of `f` with respect to parameters whose name starts with
/// `prefix`, at most `per_tensor` evenly spread entries per tensor.
pub fn check_params(
    params: &ParamSet,
    prefix: &str,
    per_tensor: usize,
    eps: f64,
    f: impl Fn(&mut Tape, &mut Bind) -> Var,
) -> GradReport {
    let mut tape = Tape::new();
    let mut b = Bind::trainable(params);
    let loss = f(&mut tape, &mut b);
    let mut g = tape.backward(loss);
    let grads = b.gradients(&mut g);

    let base_sig = tape.kink_signature();

    let eval = |p: &ParamSet| -> (f64, u64) {
        let mut tape = Tape::new();
        let mut b = Bind::frozen(p);
        let l = f(&mut tape, &mut b);
        (tape.scalar(l), tape.kink_signature())
    };

    let mut report = GradReport::default();
    let mut work = params.clone();
    for (name, t) in params.iter().filter(|(n, _)| n.starts_with(prefix)) {
        let analytic = &grads.get(name).expect("same names").data;
        for i in spread(t.len(), per_tensor) {
            let orig = t.data[i];
            let est = probe(eps, base_sig, |h| {
                work.get_mut(name).expect("cloned").data[i] = orig + h;
                let r = eval(&work);
                work.get_mut(name).expect("cloned").data[i] = orig;
                r
            });
            report.tally(name, i, analytic[i], est);
        }
    }
    report
}

/// Checks gradients of `f` with respect to an input tensor.
pub fn check_input(input: &Tensor, per_tensor: usize, eps: f64, f: impl Fn(&mut Tape, Var) -> Var) -> GradReport {
    let mut tape = Tape::new();
    let x = tape.param(input.clone());
    let loss = f(&mut tape, x);
    let g = tape.backward(loss);
    let analytic = g.get(x).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; input.len()]);

    let base_sig = tape.kink_signature();

    let eval = |t: &Tensor| -> (f64, u64) {
        let mut tape = Tape::new();
        let x = tape.constant(t.clone());
        let l = f(&mut tape, x);
        (tape.scalar(l), tape.kink_signature())
    };
    let mut report = GradReport::default();
    let mut work = input.clone();
    for i in spread(input.len(), per_tensor) {
        let orig = input.data[i];
        let est = probe(eps, base_sig, |h| {
            work.data[i] = orig + h;
            let r = eval(&work);
            work.data[i] = orig;
            r
        });
        report.tally("input", i, analytic[i], est);
    }
    report
}

/// Weighted sum `Σ wᵢ xᵢ` with fixed pseudo-random weights, a readout that
/// exercises every output entry without cancellation.
pub fn readout(tape: &mut Tape, x: Var) -> Var {
    let n = tape.value(x).len();
    let shape = tape.shape(x).to_vec();
    let w: Vec<f64> = (0..n).map(|i| ((i * 7919 % 113) as f64 / 113.0) - 0.37).collect();
    let wv = tape.constant(Tensor::new(shape, w));
    let p = tape.mul(x, wv);
    tape.sum(p)
}
