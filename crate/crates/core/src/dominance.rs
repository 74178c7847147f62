//! Stochastic-order predicates, total-positivity checks, and shape profiles
//! of conditional means.

use crate::error::{Error, Result};
use crate::mat::Mat;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochasticOrder {
    /// First-order: tail sums dominate (increasing test functions).
    First,
    /// Second-order: doubly-cumulative lower sums dominated (increasing
    /// concave test functions).
    Second,
    /// Convex order variant: doubly-cumulative tail sums dominate
    /// (increasing convex test functions).
    Convex,
}

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::Config(format!(
            "distribution lengths differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Tail sums `T(l) = sum_{j >= l} v_j`, indexed 0-based by `l`.
pub fn tail_sums(v: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; v.len()];
    let mut acc = 0.0;
    for l in (0..v.len()).rev() {
        acc += v[l];
        t[l] = acc;
    }
    t
}

/// `sum_{l <= m} sum_{j <= l} v_j` for every m (second-order statistic).
pub fn double_lower_sums(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut cum = 0.0;
    let mut acc = 0.0;
    for m in 0..v.len() {
        cum += v[m];
        acc += cum;
        out[m] = acc;
    }
    out
}

/// `sum_{l >= m} sum_{j >= l} v_j` for every m (convex-order statistic).
pub fn double_tail_sums(v: &[f64]) -> Vec<f64> {
    let t = tail_sums(v);
    tail_sums(&t)
}

/// `p` first-order stochastically dominates `q`.
pub fn first_order_dominates(p: &[f64], q: &[f64], tol: f64) -> Result<bool> {
    check_lengths(p, q)?;
    let (tp, tq) = (tail_sums(p), tail_sums(q));
    Ok(tp.iter().zip(&tq).all(|(a, b)| *a >= *b - tol))
}

/// `p` second-order stochastically dominates `q` (expectations of increasing
/// concave functions are larger under `p`).
pub fn second_order_dominates(p: &[f64], q: &[f64], tol: f64) -> Result<bool> {
    check_lengths(p, q)?;
    let (lp, lq) = (double_lower_sums(p), double_lower_sums(q));
    Ok(lp.iter().zip(&lq).all(|(a, b)| *a <= *b + tol))
}

/// `p` dominates `q` in the increasing convex order.
pub fn convex_dominates(p: &[f64], q: &[f64], tol: f64) -> Result<bool> {
    check_lengths(p, q)?;
    let (up, uq) = (double_tail_sums(p), double_tail_sums(q));
    Ok(up.iter().zip(&uq).all(|(a, b)| *a >= *b - tol))
}

pub fn dominates(order: StochasticOrder, p: &[f64], q: &[f64], tol: f64) -> Result<bool> {
    match order {
        StochasticOrder::First => first_order_dominates(p, q, tol),
        StochasticOrder::Second => second_order_dominates(p, q, tol),
        StochasticOrder::Convex => convex_dominates(p, q, tol),
    }
}

/// Forms the mixtures `(p_hi_next + alpha p_lo) / (1+alpha)` and
/// `(p_hi + alpha p_lo_next) / (1+alpha)` and tests the first against the
/// second in the requested order. With `order = Second` this is the
/// second-order mixture condition of the concave-value theorem.
pub fn mixture_dominates(
    p_hi_next: &[f64],
    p_lo: &[f64],
    p_hi: &[f64],
    p_lo_next: &[f64],
    alpha: f64,
    order: StochasticOrder,
    tol: f64,
) -> Result<bool> {
    if alpha <= 0.0 {
        return Err(Error::Config(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    check_lengths(p_hi_next, p_lo)?;
    check_lengths(p_hi, p_lo_next)?;
    check_lengths(p_hi_next, p_hi)?;
    let norm = 1.0 + alpha;
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x + alpha * y) / norm)
            .collect()
    };
    dominates(order, &mix(p_hi_next, p_lo), &mix(p_hi, p_lo_next), tol)
}

/// Witness of a negative minor: row and column index sets plus the value.
#[derive(Clone, Debug)]
pub struct TpWitness {
    pub order: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub minor: f64,
}

#[derive(Clone, Debug)]
pub struct TpOutcome {
    pub holds: bool,
    pub witness: Option<TpWitness>,
    pub minors_checked: u128,
}

#[derive(Clone, Copy, Debug)]
pub struct TpOptions {
    /// Refuse full enumeration above this many minors unless sampling.
    pub size_guard: u128,
    /// Uniform random sampling: (seed, samples per minor order).
    pub sample: Option<(u64, usize)>,
}

impl Default for TpOptions {
    fn default() -> Self {
        Self {
            size_guard: 1_000_000_000,
            sample: None,
        }
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num = 1u128;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

fn det_k(m: &Mat, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        1 => m.get(rows[0], cols[0]),
        2 => {
            m.get(rows[0], cols[0]) * m.get(rows[1], cols[1])
                - m.get(rows[0], cols[1]) * m.get(rows[1], cols[0])
        }
        3 => {
            let a = m.get(rows[0], cols[0]);
            let b = m.get(rows[0], cols[1]);
            let c = m.get(rows[0], cols[2]);
            let d = m.get(rows[1], cols[0]);
            let e = m.get(rows[1], cols[1]);
            let f = m.get(rows[1], cols[2]);
            let g = m.get(rows[2], cols[0]);
            let h = m.get(rows[2], cols[1]);
            let i = m.get(rows[2], cols[2]);
            a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
        }
        _ => unreachable!("orders above 3 are out of scope"),
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Checks total positivity of order `order` (every k x k minor, k <= order,
/// nonnegative within `tol`). Full enumeration with a size guard; an optional
/// seeded sampling mode covers matrices past the guard.
pub fn is_totally_positive(m: &Mat, order: usize, tol: f64, opts: TpOptions) -> Result<TpOutcome> {
    if !(1..=3).contains(&order) {
        return Err(Error::Config(format!(
            "TP order {order} not supported (1..=3)"
        )));
    }
    if m.data().iter().any(|&v| v < -tol) {
        // a bare negative entry is already a 1x1 witness
        let (i, j) = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .find(|&(i, j)| m.get(i, j) < -tol)
            .unwrap();
        return Ok(TpOutcome {
            holds: false,
            witness: Some(TpWitness {
                order: 1,
                rows: vec![i],
                cols: vec![j],
                minor: m.get(i, j),
            }),
            minors_checked: 1,
        });
    }
    let mut total: u128 = 0;
    for k in 1..=order {
        total += binom(m.nrows(), k) * binom(m.ncols(), k);
    }
    if let Some((seed, samples)) = opts.sample {
        return Ok(sample_minors(m, order, tol, seed, samples));
    }
    if total > opts.size_guard {
        return Err(Error::GuardExceeded {
            required: total,
            guard: opts.size_guard,
        });
    }
    let mut checked: u128 = binom(m.nrows(), 1) * binom(m.ncols(), 1);
    for k in 2..=order {
        let row_sets = combinations(m.nrows(), k);
        let col_sets = combinations(m.ncols(), k);
        checked += (row_sets.len() as u128) * (col_sets.len() as u128);
        // deterministic first violation in (row-set, col-set) lexicographic order
        let hit = row_sets
            .par_iter()
            .enumerate()
            .filter_map(|(ri, rows)| {
                col_sets.iter().enumerate().find_map(|(ci, cols)| {
                    let d = det_k(m, rows, cols);
                    if d < -tol {
                        Some((ri, ci, d))
                    } else {
                        None
                    }
                })
            })
            .min_by_key(|&(ri, ci, _)| (ri, ci));
        if let Some((ri, ci, d)) = hit {
            return Ok(TpOutcome {
                holds: false,
                witness: Some(TpWitness {
                    order: k,
                    rows: row_sets[ri].clone(),
                    cols: col_sets[ci].clone(),
                    minor: d,
                }),
                minors_checked: checked,
            });
        }
    }
    Ok(TpOutcome {
        holds: true,
        witness: None,
        minors_checked: checked,
    })
}

fn sample_minors(m: &Mat, order: usize, tol: f64, seed: u64, samples: usize) -> TpOutcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0u128;
    for k in 2..=order {
        for _ in 0..samples {
            let mut rows: Vec<usize> = (0..k).map(|_| rng.gen_range(0..m.nrows())).collect();
            let mut cols: Vec<usize> = (0..k).map(|_| rng.gen_range(0..m.ncols())).collect();
            rows.sort_unstable();
            rows.dedup();
            cols.sort_unstable();
            cols.dedup();
            if rows.len() < k || cols.len() < k {
                continue;
            }
            checked += 1;
            let d = det_k(m, &rows, &cols);
            if d < -tol {
                return TpOutcome {
                    holds: false,
                    witness: Some(TpWitness {
                        order: k,
                        rows,
                        cols,
                        minor: d,
                    }),
                    minors_checked: checked,
                };
            }
        }
    }
    TpOutcome {
        holds: true,
        witness: None,
        minors_checked: checked,
    }
}

/// Shape summary of the conditional means `m_i = sum_j (j+1) P_ij` (1-based
/// state labels). `interior_*` flags ignore second differences that touch the
/// first or last state, where reflecting and absorbing boundary rows bend the
/// profile.
#[derive(Clone, Debug)]
pub struct MeanProfile {
    pub values: Vec<f64>,
    pub increasing: bool,
    pub concave: bool,
    pub convex: bool,
    pub interior_concave: bool,
    pub interior_convex: bool,
}

pub fn conditional_mean_profile(p: &Mat, tol: f64) -> MeanProfile {
    let n = p.nrows();
    let labels: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let values = p.mul_vec(&labels);
    let increasing = values.windows(2).all(|w| w[1] >= w[0] - tol);
    let d2: Vec<f64> = values
        .windows(3)
        .map(|w| (w[2] - w[1]) - (w[1] - w[0]))
        .collect();
    let concave = d2.iter().all(|&v| v <= tol);
    let convex = d2.iter().all(|&v| v >= -tol);
    // drop the second differences whose triple touches state 1 or state n
    let inner = if d2.len() > 2 {
        &d2[1..d2.len() - 1]
    } else {
        &[][..]
    };
    let interior_concave = inner.iter().all(|&v| v <= tol);
    let interior_convex = inner.iter().all(|&v| v >= -tol);
    MeanProfile {
        values,
        increasing,
        concave,
        convex,
        interior_concave,
        interior_convex,
    }
}
