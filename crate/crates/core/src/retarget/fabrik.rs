use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{norm3, sub3, Skeleton};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FabrikConfig {
    pub max_iters: usize,
    /// End-effector tolerance as a fraction of the skeleton's reach.
    pub tol_fraction: f64,
}

impl Default for FabrikConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol_fraction: 1e-4,
        }
    }
}

impl FabrikConfig {
    pub fn tolerance(&self, skel: &Skeleton) -> f64 {
        self.tol_fraction * reach(skel)
    }
}

/// Longest root-to-leaf path length.
pub fn reach(skel: &Skeleton) -> f64 {
    let mut depth = vec![0.0; skel.joints()];
    for j in 1..skel.joints() {
        let p = skel.parents[j].expect("non-root");
        depth[j] = depth[p] + skel.bone_lengths[j - 1];
    }
    depth.into_iter().fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FabrikResult {
    pub positions: Vec<[f64; 3]>,
    pub iterations: usize,
    /// Largest end-effector distance to its target after the last iteration.
    pub error: f64,
    /// That distance before the first and after every iteration.
    pub history: Vec<f64>,
}

fn unit_or(v: [f64; 3], fallback: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    if n < 1e-12 {
        fallback
    } else {
        [v[0] / n, v[1] / n, v[2] / n]
    }
}

fn along(base: [f64; 3], dir: [f64; 3], len: f64) -> [f64; 3] {
    [base[0] + len * dir[0], base[1] + len * dir[1], base[2] + len * dir[2]]
}

fn target_error(q: &[[f64; 3]], targets: &[(usize, [f64; 3])]) -> f64 {
    targets.iter().map(|(j, t)| norm3(sub3(q[*j], *t))).fold(0.0, f64::max)
}

/// Forward-and-backward reaching on the skeleton tree. The root stays put;
/// a joint shared by several targeted chains moves to the mean of the
/// positions its children propose. Bones with no target below them keep
/// their direction.
pub fn fabrik_solve(
    initial: &[[f64; 3]],
    skel: &Skeleton,
    targets: &[(usize, [f64; 3])],
    max_iters: usize,
    tol: f64,
) -> Result<FabrikResult> {
    let nj = skel.joints();
    if initial.len() != nj {
        return Err(Error::shape(format!(
            "{} joint positions for {nj} joints",
            initial.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("FABRIK tolerance must be positive".into()));
    }
    let mut active = vec![false; nj];
    for &(j, _) in targets {
        if j == 0 || j >= nj {
            return Err(Error::InvalidConfig(format!("joint {j} cannot be an end effector")));
        }
        active[j] = true;
    }
    for j in (1..nj).rev() {
        if active[j] {
            active[skel.parents[j].expect("non-root")] = true;
        }
    }
    let mut target_of = vec![None; nj];
    for &(j, t) in targets {
        target_of[j] = Some(t);
    }

    let mut q = initial.to_vec();
    let mut history = vec![target_error(&q, targets)];
    let mut iterations = 0;
    while iterations < max_iters && *history.last().expect("nonempty") >= tol {
        let before = q.clone();

        let mut sum = vec![[0.0; 3]; nj];
        let mut count = vec![0usize; nj];
        for j in (1..nj).rev() {
            if !active[j] {
                continue;
            }
            if let Some(t) = target_of[j] {
                q[j] = t;
            } else if count[j] > 0 {
                let c = count[j] as f64;
                q[j] = [sum[j][0] / c, sum[j][1] / c, sum[j][2] / c];
            }
            let p = skel.parents[j].expect("non-root");
            let d = unit_or(sub3(q[p], q[j]), {
                let r = skel.rest_directions[j - 1];
                [-r[0], -r[1], -r[2]]
            });
            let s = along(q[j], d, skel.bone_lengths[j - 1]);
            for k in 0..3 {
                sum[p][k] += s[k];
            }
            count[p] += 1;
        }

        q[0] = initial[0];
        for j in 1..nj {
            let p = skel.parents[j].expect("non-root");
            let rest = skel.rest_directions[j - 1];
            let d = if active[j] {
                unit_or(sub3(q[j], q[p]), rest)
            } else {
                unit_or(sub3(before[j], before[p]), rest)
            };
            q[j] = along(q[p], d, skel.bone_lengths[j - 1]);
        }
        iterations += 1;
        history.push(target_error(&q, targets));
    }
    Ok(FabrikResult {
        error: *history.last().expect("nonempty"),
        positions: q,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(lengths: &[f64]) -> Skeleton {
        let n = lengths.len() + 1;
        Skeleton::new(
            (0..n).map(|j| j.checked_sub(1)).collect(),
            lengths.to_vec(),
            vec![[1.0, 0.0, 0.0]; lengths.len()],
        )
        .unwrap()
    }

    fn bone_error(q: &[[f64; 3]], s: &Skeleton) -> f64 {
        (1..s.joints())
            .map(|j| (norm3(sub3(q[j], q[s.parents[j].unwrap()])) - s.bone_lengths[j - 1]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn already_at_target() {
        let s = chain(&[1.0, 1.0]);
        let p = vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let r = fabrik_solve(&p, &s, &[(2, [1.0, 1.0, 0.0])], 20, 1e-9).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.positions, p);
    }

    #[test]
    fn two_link_law_of_cosines() {
        let s = chain(&[1.0, 1.0]);
        let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let p = vec![p[0], [0.8, 0.6, 0.0], [1.6, 1.2, 0.0]];
        let target = [1.0, 1.0, 0.0];
        let r = fabrik_solve(&p, &s, &[(2, target)], 1000, 1e-12).unwrap();
        let q = &r.positions;
        let (a, b) = (sub3(q[0], q[1]), sub3(q[2], q[1]));
        let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (norm3(a) * norm3(b));
        // c² = a² + b² − 2ab·cos θ with a = b = 1, c = √2 gives θ = 90°.
        let want = (1.0f64 + 1.0 - 2.0) / 2.0;
        assert!((cos - want).abs() < 1e-6, "{cos}");
        assert!(norm3(sub3(q[2], target)) < 1e-6);
        assert!(bone_error(q, &s) < 1e-9);
    }

    #[test]
    fn unreachable_straightens() {
        let s = chain(&[1.0, 1.0]);
        let p = vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let target = [3.0 / 2f64.sqrt(), 3.0 / 2f64.sqrt(), 0.0];
        let r = fabrik_solve(&p, &s, &[(2, target)], 200, 1e-9).unwrap();
        assert!((r.error - 1.0).abs() < 1e-6);
        let d = 1.0 / 2f64.sqrt();
        assert!(norm3(sub3(r.positions[1], [d, d, 0.0])) < 1e-6);
        assert!(norm3(sub3(r.positions[2], [2.0 * d, 2.0 * d, 0.0])) < 1e-6);
    }

    #[test]
    fn branching_tree_reaches_both_hands() {
        let s = crate::motion::PoseLayout::default_upper_body().skeleton;
        let rest = s.rest_pose();
        let mut lt = rest[6];
        lt[0] += 80.0;
        lt[1] += 150.0;
        let mut rt = rest[9];
        rt[2] += 120.0;
        let r = fabrik_solve(&rest, &s, &[(6, lt), (9, rt)], 200, 1e-6).unwrap();
        assert!(r.error < 1e-6, "{}", r.error);
        assert!(bone_error(&r.positions, &s) < 1e-9);
        assert_eq!(r.positions[3], {
            let n = r.positions[2];
            [n[0], n[1] + 120.0, n[2]]
        });
    }

    proptest! {
        #[test]
        fn lengths_kept_and_error_non_increasing(
            angles in proptest::collection::vec(-3.0f64..3.0, 3),
            tx in -1.5f64..1.5, ty in -1.5f64..1.5, tz in -1.0f64..1.0,
        ) {
            let s = chain(&[1.0, 0.7, 0.5]);
            let mut p = vec![[0.0; 3]];
            for (k, a) in angles.iter().enumerate() {
                let prev = p[k];
                p.push(along(prev, [a.cos(), a.sin(), 0.0], s.bone_lengths[k]));
            }
            let target = [tx, ty, tz];
            prop_assume!(norm3(target) < 2.1);
            let r = fabrik_solve(&p, &s, &[(3, target)], 20, 1e-9).unwrap();
            prop_assert!(bone_error(&r.positions, &s) < 1e-9);
            for w in r.history[1..].windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", r.history);
            }
        }
    }
}
