//! Seeded random instances for the property suites: generic MDPs, MDPs that
//! satisfy the textbook monotonicity conditions by construction, and shaped
//! random vectors.

use crate::mat::Mat;
use crate::mdp::{FiniteMdp, Objective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Unstructured MDP with uniform-random rewards and random stochastic rows.
pub fn random_mdp(
    rng: &mut impl Rng,
    max_states: usize,
    max_actions: usize,
    discount: f64,
) -> FiniteMdp {
    let x_n = rng.gen_range(2..=max_states);
    let a_n = rng.gen_range(2..=max_actions);
    let rewards = Mat::from_fn(x_n, a_n, |_, _| rng.gen_range(-1.0..1.0));
    let transitions = (0..a_n)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..x_n).map(|_| random_distribution(rng, x_n)).collect();
            Mat::from_rows(&rows)
        })
        .collect();
    FiniteMdp::new(
        transitions,
        rewards,
        Some(discount),
        None,
        Objective::Maximize,
    )
    .expect("random rows are stochastic")
}

/// MDP satisfying the textbook conditions exactly: rewards increasing in the
/// state and supermodular, transition rows built by the rank-one shift
/// `p + Delta(x,a) (e_X - e_1)` with `Delta = cap * g(x) h(a)` for increasing
/// `g` (zero at the first state) and increasing positive `h`, which makes
/// the rows FOSD-increasing and the tail sums supermodular.
pub fn random_supermodular_mdp(
    rng: &mut impl Rng,
    max_states: usize,
    max_actions: usize,
    discount: f64,
) -> FiniteMdp {
    let x_n = rng.gen_range(2..=max_states);
    let a_n = rng.gen_range(2..=max_actions);
    // increasing base f(x), supermodular cross term
    let mut f = vec![0.0];
    for _ in 1..x_n {
        let prev = *f.last().unwrap();
        f.push(prev + rng.gen_range(0.0..2.0));
    }
    let cross = rng.gen_range(0.0..1.0);
    let g_act: Vec<f64> = (0..a_n)
        .map(|a| a as f64 * rng.gen_range(0.0..1.0))
        .collect();
    let rewards = Mat::from_fn(x_n, a_n, |x, a| f[x] + g_act[a] + cross * (x * a) as f64);
    let p = random_distribution(rng, x_n);
    let cap = p[0].min(1.0 - p[x_n - 1]) * rng.gen_range(0.5..1.0);
    let mut g = vec![0.0];
    for _ in 1..x_n {
        let prev: f64 = *g.last().unwrap();
        g.push((prev + rng.gen_range(0.0..0.5)).min(1.0));
    }
    let gmax = g.last().copied().unwrap_or(1.0).max(1e-9);
    let mut h: Vec<f64> = vec![rng.gen_range(0.1..0.5)];
    for _ in 1..a_n {
        let prev = *h.last().unwrap();
        h.push((prev + rng.gen_range(0.0..0.5)).min(1.0));
    }
    let transitions: Vec<Mat> = (0..a_n)
        .map(|a| {
            Mat::from_fn(x_n, x_n, |i, j| {
                let d = cap * (g[i] / gmax) * h[a];
                if j == 0 {
                    p[0] - d
                } else if j == x_n - 1 {
                    p[x_n - 1] + d
                } else {
                    p[j]
                }
            })
        })
        .collect();
    FiniteMdp::new(
        transitions,
        rewards,
        Some(discount),
        None,
        Objective::Maximize,
    )
    .expect("construction preserves stochastic rows")
}

/// Concave increasing vector: cumulative sums of sorted-descending positive
/// increments, plus a random offset.
pub fn random_concave_increasing(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut inc: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    inc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut v = vec![rng.gen_range(-5.0..5.0)];
    for d in inc {
        let prev = *v.last().unwrap();
        v.push(prev + d);
    }
    v
}

/// Convex decreasing vector: negative increments rising toward zero.
pub fn random_convex_decreasing(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut inc: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| -rng.gen_range(0.0..1.0))
        .collect();
    inc.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut v = vec![rng.gen_range(-5.0..5.0)];
    for d in inc {
        let prev = *v.last().unwrap();
        v.push(prev + d);
    }
    v
}
