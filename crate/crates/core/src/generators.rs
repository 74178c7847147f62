//! Constructors for every numerical example instance, with the printed
//! parameters baked in as overridable defaults. Generators are pure: the
//! same spec always produces the same model.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::mdp::{FiniteMdp, Objective};

fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

/// Shifts `amount` of probability mass from the first to the last entry
/// (negative amounts shift the other way), failing on invalid rows.
fn shift_mass(row: &mut [f64], amount: f64, context: &str) -> Result<()> {
    let n = row.len();
    row[0] -= amount;
    row[n - 1] += amount;
    if row[0] < -1e-12 || row[n - 1] < -1e-12 || row[0] > 1.0 + 1e-12 || row[n - 1] > 1.0 + 1e-12 {
        return Err(Error::InvalidModel(format!(
            "{context}: probability shift of {amount} leaves entries ({}, {}) outside [0,1]",
            row[0],
            row[n - 1]
        )));
    }
    Ok(())
}

/// Drifting-row transition family shared by the sigmoidal and prospect
/// examples: row i of the first action is the base row plus an
/// `(i-1) mu`-sized mass shift toward the top state, and each next action
/// shifts a further `epsilon` down below the split state and up from it.
fn drift_shift_transitions(
    num_states: usize,
    num_actions: usize,
    mu: f64,
    epsilon: f64,
    split: usize,
    base_row: &[f64],
    context: &str,
) -> Result<Vec<Mat>> {
    let x_n = num_states;
    if base_row.len() != x_n {
        return Err(Error::InvalidModel(format!(
            "{context}: base row has length {}, expected {x_n}",
            base_row.len()
        )));
    }
    let mut first = Vec::with_capacity(x_n);
    first.push(base_row.to_vec());
    for i in 1..x_n {
        let mut row = first[i - 1].clone();
        shift_mass(&mut row, mu, context)?;
        first.push(row);
    }
    let mut mats = vec![Mat::from_rows(&first)];
    for _ in 1..num_actions {
        let prev = mats.last().unwrap();
        let mut rows: Vec<Vec<f64>> = (0..x_n).map(|i| prev.row(i).to_vec()).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            // 1-based state i+1; at or below the split the extra volatility
            // moves mass down, above it up
            let amount = if i < split { -epsilon } else { epsilon };
            shift_mass(row, amount, context)?;
        }
        mats.push(Mat::from_rows(&rows));
    }
    Ok(mats)
}

/// Sigmoidal/concave reward study: X=201 states, three actions, rewards from
/// the ten-parameter family, transitions from the drift-shift construction
/// with the volatility flip at state 50.
#[derive(Clone, Debug)]
pub struct SigmoidalSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub horizon: usize,
    pub mu: f64,
    pub epsilon: f64,
    pub split: usize,
    pub theta: [f64; 10],
    /// Base row of the first action; uniform when absent.
    pub base_row: Option<Vec<f64>>,
}

impl Default for SigmoidalSpec {
    fn default() -> Self {
        Self::for_states(201)
    }
}

impl SigmoidalSpec {
    /// Defaults rescaled to a different state count (the drift, volatility,
    /// and sigmoid center all depend on it).
    pub fn for_states(num_states: usize) -> Self {
        let x = num_states as f64;
        Self {
            num_states,
            num_actions: 3,
            discount: 0.9,
            horizon: 100,
            mu: 0.004 / x,
            epsilon: 0.05 / x,
            split: 50.min(num_states / 4 + 1),
            theta: [2.0, x - 1.0, 20.0, 5.0, 80.0, -2.0, 5.0, 80.0, -3.5, 0.01],
            base_row: None,
        }
    }
}

/// Rewards of the sigmoidal family. The sigmoid of the first action is the
/// increasing orientation (rising toward 2 at the top of the state space).
pub fn sigmoidal_rewards(theta: &[f64; 10], num_states: usize) -> Mat {
    Mat::from_fn(num_states, 3, |i, a| {
        let x = (i + 1) as f64;
        match a {
            0 => theta[0] / (1.0 + (-(x - theta[1]) / theta[2]).exp()),
            1 => theta[3] * (1.0 - (-x / theta[4]).exp()) + theta[5],
            _ => theta[6] * (1.0 - (-x / theta[7]).exp()) + theta[8] + theta[9] * x,
        }
    })
}

pub fn build_sigmoidal(spec: &SigmoidalSpec) -> Result<FiniteMdp> {
    if spec.num_actions != 3 {
        return Err(Error::Config(
            "the sigmoidal reward family defines exactly three actions".into(),
        ));
    }
    let uniform = vec![1.0 / spec.num_states as f64; spec.num_states];
    let base = spec.base_row.as_deref().unwrap_or(&uniform);
    let transitions = drift_shift_transitions(
        spec.num_states,
        spec.num_actions,
        spec.mu,
        spec.epsilon,
        spec.split,
        base,
        "sigmoidal transitions",
    )?;
    let rewards = sigmoidal_rewards(&spec.theta, spec.num_states);
    FiniteMdp::new(
        transitions,
        rewards,
        Some(spec.discount),
        Some(zeros(spec.num_states)),
        Objective::Maximize,
    )
}

/// Prospect-theory rewards: asymmetric sigmoids crossing zero at X/2 with
/// shape parameters increasing in the action; transitions reuse the
/// drift-shift family with the volatility flip at X/2.
#[derive(Clone, Debug)]
pub struct ProspectSpec {
    pub num_states: usize,
    /// Shape parameter per action, each > 1, increasing.
    pub theta: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
    pub mu: f64,
    pub epsilon: f64,
    pub base_row: Option<Vec<f64>>,
}

impl Default for ProspectSpec {
    fn default() -> Self {
        Self::for_states(100)
    }
}

impl ProspectSpec {
    pub fn for_states(num_states: usize) -> Self {
        let x = num_states as f64;
        Self {
            num_states,
            theta: vec![1.2, 1.6, 2.0],
            discount: 0.9,
            horizon: 100,
            mu: 0.004 / x,
            epsilon: 0.05 / x,
            base_row: None,
        }
    }
}

pub fn build_prospect(spec: &ProspectSpec) -> Result<FiniteMdp> {
    let x_n = spec.num_states;
    if !x_n.is_multiple_of(2) || x_n < 4 {
        return Err(Error::Config(format!(
            "prospect rewards need an even number of states >= 4, got {x_n}"
        )));
    }
    if spec.theta.iter().any(|&t| t <= 1.0) {
        return Err(Error::Config("every shape parameter must exceed 1".into()));
    }
    if spec.theta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "shape parameters must increase in the action".into(),
        ));
    }
    let mu_r = 2.0 / (x_n as f64 - 2.0);
    let rewards = Mat::from_fn(x_n, spec.theta.len(), |i, a| {
        let z = mu_r * i as f64; // mu (x - 1) with 1-based x
        let zp = z.powf(spec.theta[a]);
        2.0 * zp / (1.0 + zp) - 1.0
    });
    let uniform = vec![1.0 / x_n as f64; x_n];
    let base = spec.base_row.as_deref().unwrap_or(&uniform);
    // volatility flips at X/2: dominated strictly below, dominating from X/2 on
    let transitions = drift_shift_transitions(
        x_n,
        spec.theta.len(),
        spec.mu,
        spec.epsilon,
        x_n / 2 - 1,
        base,
        "prospect transitions",
    )?;
    FiniteMdp::new(
        transitions,
        rewards,
        Some(spec.discount),
        Some(zeros(x_n)),
        Objective::Maximize,
    )
}

/// Rank-one perturbation family: rows `p + Delta_{i,a} (e_X - e_1)` with
/// state-only rewards `phi`. `Delta` must vanish on the first row, stay in
/// `[0, min(p_1, 1-p_X)]`, increase in the state, and itself satisfy
/// interval dominance.
pub fn build_delta_perturbation(p: &[f64], delta: &Mat, phi: &[f64]) -> Result<FiniteMdp> {
    let x_n = p.len();
    if delta.nrows() != x_n || phi.len() != x_n {
        return Err(Error::Config(format!(
            "delta rows ({}) and phi length ({}) must equal the state count {x_n}",
            delta.nrows(),
            phi.len()
        )));
    }
    let a_n = delta.ncols();
    let cap = p[0].min(1.0 - p[x_n - 1]);
    for a in 0..a_n {
        if delta.get(0, a).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "Delta must vanish at the first state (action {})",
                a + 1
            )));
        }
        for i in 0..x_n {
            let d = delta.get(i, a);
            if d < -1e-12 || d > cap + 1e-12 {
                return Err(Error::Config(format!(
                    "Delta[{},{}] = {d} outside [0, {cap}]",
                    i + 1,
                    a + 1
                )));
            }
            if i + 1 < x_n && delta.get(i + 1, a) < d - 1e-12 {
                return Err(Error::Config(format!(
                    "Delta must be non-decreasing in the state (action {}, state {})",
                    a + 1,
                    i + 1
                )));
            }
        }
    }
    // interval dominance of Delta itself
    if a_n >= 2 {
        let ivs = crate::structural::table_id_intervals(
            delta,
            crate::structural::IdOrientation::Standard,
            1e-12,
        );
        match crate::structural::find_common_schedule(
            &ivs,
            &ivs,
            crate::structural::ScheduleMode::Pairwise,
        )? {
            crate::structural::ScheduleOutcome::Feasible(_) => {}
            crate::structural::ScheduleOutcome::Infeasible(w) => {
                return Err(Error::Config(format!(
                    "Delta violates the interval-dominance precondition: {w}"
                )));
            }
        }
    }
    let transitions: Vec<Mat> = (0..a_n)
        .map(|a| {
            Mat::from_fn(x_n, x_n, |i, j| {
                let d = delta.get(i, a);
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
    let rewards = Mat::from_fn(x_n, a_n, |i, _| phi[i]);
    FiniteMdp::new(
        transitions,
        rewards,
        Some(0.9),
        Some(zeros(x_n)),
        Objective::Maximize,
    )
}

/// Builds a `Delta` table from the sigmoidal reward curves: one common
/// positive scale maps the family into `[0, min(p_1, 1-p_X)]` after
/// anchoring each curve at zero in the first state.
pub fn delta_from_sigmoidal(p: &[f64]) -> Mat {
    let x_n = p.len();
    let theta = [
        2.0,
        x_n as f64 - 1.0,
        20.0,
        5.0,
        80.0,
        -2.0,
        5.0,
        80.0,
        -3.5,
        0.01,
    ];
    let curves = sigmoidal_rewards(&theta, x_n);
    let cap = p[0].min(1.0 - p[x_n - 1]);
    let mut shifted = Mat::from_fn(x_n, 3, |i, a| curves.get(i, a) - curves.get(0, a));
    let max = shifted
        .data()
        .iter()
        .fold(0.0f64, |m, &v| m.max(v))
        .max(f64::MIN_POSITIVE);
    let scale = cap / max;
    for i in 0..x_n {
        for a in 0..3 {
            let v = shifted.get(i, a) * scale;
            shifted.set(i, a, v.clamp(0.0, cap));
        }
    }
    shifted
}

/// Perturbed bi-diagonal chain of the discounted example: down-moves with
/// probability `theta(a)`, an `(A-a) epsilon` leak to the top state, and the
/// printed 2 x 6 reward table.
#[derive(Clone, Debug)]
pub struct PerturbedBidiagonalSpec {
    pub num_states: usize,
    /// Per-action down-move probabilities, increasing.
    pub theta: Vec<f64>,
    pub epsilon: f64,
    pub discount: f64,
    pub horizon: usize,
    /// `X x A` reward table.
    pub rewards: Mat,
    /// Permit epsilon large enough to restore tail-sum supermodularity.
    pub allow_supermodular: bool,
}

impl Default for PerturbedBidiagonalSpec {
    fn default() -> Self {
        let eps = 1e-3;
        Self {
            num_states: 6,
            theta: vec![0.3, 0.3 + 20.0 * eps],
            epsilon: eps,
            discount: 0.9,
            horizon: 200,
            rewards: Mat::from_rows(&[
                vec![1.0, 0.0],
                vec![3.5, 2.0],
                vec![6.0, 3.0],
                vec![6.0, 6.0],
                vec![11.0, 12.0],
                vec![43.0, 63.0],
            ]),
            allow_supermodular: false,
        }
    }
}

/// Transition matrices of the perturbed bi-diagonal family.
pub fn perturbed_bidiagonal_transitions(
    num_states: usize,
    theta: &[f64],
    epsilon: f64,
) -> Result<Vec<Mat>> {
    let x_n = num_states;
    let a_n = theta.len();
    if x_n < 3 {
        return Err(Error::Config("need at least three states".into()));
    }
    let mut out = Vec::with_capacity(a_n);
    for (a, &th) in theta.iter().enumerate() {
        let pe = (a_n - 1 - a) as f64 * epsilon;
        if th < 0.0 || th + pe > 1.0 {
            return Err(Error::InvalidModel(format!(
                "theta({}) = {th} with perturbation {pe} leaves row {} invalid",
                a + 1,
                2
            )));
        }
        out.push(Mat::from_fn(x_n, x_n, |i, j| {
            if i == 0 {
                if j == 0 {
                    1.0 - pe
                } else if j == x_n - 1 {
                    pe
                } else {
                    0.0
                }
            } else if i == x_n - 1 {
                if j == x_n - 2 {
                    th
                } else if j == x_n - 1 {
                    1.0 - th
                } else {
                    0.0
                }
            } else if j == i - 1 {
                th
            } else if j == i {
                1.0 - th - pe
            } else if j == x_n - 1 {
                pe
            } else {
                0.0
            }
        }));
    }
    Ok(out)
}

pub fn build_perturbed_bidiagonal(spec: &PerturbedBidiagonalSpec) -> Result<FiniteMdp> {
    if spec.theta.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "theta(a) must be strictly increasing in the action".into(),
        ));
    }
    let min_gap = spec
        .theta
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if spec.epsilon >= min_gap && !spec.allow_supermodular {
        return Err(Error::Config(format!(
            "epsilon = {} is not below min theta gap {min_gap}; the tail sums would become \
             supermodular (set allow_supermodular to override)",
            spec.epsilon
        )));
    }
    if spec.rewards.nrows() != spec.num_states || spec.rewards.ncols() != spec.theta.len() {
        return Err(Error::Config(format!(
            "reward table is {}x{}, expected {}x{}",
            spec.rewards.nrows(),
            spec.rewards.ncols(),
            spec.num_states,
            spec.theta.len()
        )));
    }
    let transitions = perturbed_bidiagonal_transitions(spec.num_states, &spec.theta, spec.epsilon)?;
    FiniteMdp::new(
        transitions,
        spec.rewards.clone(),
        Some(spec.discount),
        Some(zeros(spec.num_states)),
        Objective::Maximize,
    )
}

/// Minimize-cost chain with pure bi-diagonal up-drift and concave costs.
/// The saturating-exponential cost belongs to the first action and the
/// quadratic to the second; the printed formula assignment is swapped, which
/// is the only pairing under which the costs single-cross upward and the
/// instance satisfies the concave-value conditions.
#[derive(Clone, Debug)]
pub struct ConcaveBidiagonalSpec {
    pub num_states: usize,
    /// Up-move probabilities per action, decreasing.
    pub theta: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
    /// [quad2, quad1, quad0, exp-scale, exp-rate, exp-shift]
    pub cost_theta: [f64; 6],
}

impl Default for ConcaveBidiagonalSpec {
    fn default() -> Self {
        Self {
            num_states: 50,
            theta: vec![0.8, 0.7],
            discount: 0.95,
            horizon: 200,
            cost_theta: [-0.01, 1.0, 8.8, 25.0, -0.1, -0.4],
        }
    }
}

pub fn bidiagonal_transitions(num_states: usize, theta: &[f64]) -> Vec<Mat> {
    theta
        .iter()
        .map(|&th| {
            Mat::from_fn(num_states, num_states, |i, j| {
                if i == num_states - 1 {
                    if j == num_states - 1 {
                        1.0
                    } else {
                        0.0
                    }
                } else if j == i {
                    1.0 - th
                } else if j == i + 1 {
                    th
                } else {
                    0.0
                }
            })
        })
        .collect()
}

pub fn build_concave_bidiagonal(spec: &ConcaveBidiagonalSpec) -> Result<FiniteMdp> {
    if spec.theta.len() != 2 {
        return Err(Error::Config(
            "the concave-cost example has two actions".into(),
        ));
    }
    if spec.theta[1] >= spec.theta[0] {
        return Err(Error::Config("theta(a) must decrease in the action".into()));
    }
    let t = &spec.cost_theta;
    let costs = Mat::from_fn(spec.num_states, 2, |i, a| {
        let x = (i + 1) as f64;
        if a == 0 {
            t[3] * (1.0 - (t[4] * x + t[5]).exp())
        } else {
            t[0] * x * x + t[1] * x + t[2]
        }
    });
    let transitions = bidiagonal_transitions(spec.num_states, &spec.theta);
    FiniteMdp::new(
        transitions,
        costs,
        Some(spec.discount),
        Some(zeros(spec.num_states)),
        Objective::Minimize,
    )
}

/// Minimize-cost tri-diagonal chain: up-moves `p_a`, down-moves `q_a`, an
/// absorbing bottom state, and a sticky top state with stay-probability
/// `s_a`; cubic decreasing concave costs.
#[derive(Clone, Debug)]
pub struct TridiagonalSpec {
    pub num_states: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    pub discount: f64,
    pub horizon: usize,
    pub cost_theta: [f64; 4],
}

impl Default for TridiagonalSpec {
    fn default() -> Self {
        Self {
            num_states: 35,
            p: vec![0.2, 0.1],
            q: vec![0.05, 0.1],
            s: vec![0.95, 1.0],
            discount: 0.95,
            horizon: 200,
            cost_theta: [15.0, 0.3 / 64.0, 1.0, 3.0 / 64.0],
        }
    }
}

pub fn tridiagonal_transitions(num_states: usize, p: &[f64], q: &[f64], s: &[f64]) -> Vec<Mat> {
    (0..p.len())
        .map(|a| {
            Mat::from_fn(num_states, num_states, |i, j| {
                if i == 0 {
                    if j == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else if i == num_states - 1 {
                    if j == num_states - 2 {
                        1.0 - s[a]
                    } else if j == num_states - 1 {
                        s[a]
                    } else {
                        0.0
                    }
                } else if j == i - 1 {
                    q[a]
                } else if j == i {
                    1.0 - p[a] - q[a]
                } else if j == i + 1 {
                    p[a]
                } else {
                    0.0
                }
            })
        })
        .collect()
}

pub fn build_tridiagonal(spec: &TridiagonalSpec) -> Result<FiniteMdp> {
    let a_n = spec.p.len();
    if spec.q.len() != a_n || spec.s.len() != a_n {
        return Err(Error::Config(
            "p, q, s must have one entry per action".into(),
        ));
    }
    // the printed parameters satisfy these with equality at the second
    // action, so the relations are asserted in non-strict form
    for a in 0..a_n {
        if spec.q[a] > spec.p[a] {
            return Err(Error::Config(format!(
                "q({}) = {} must not exceed p({}) = {}",
                a + 1,
                spec.q[a],
                a + 1,
                spec.p[a]
            )));
        }
        if spec.s[a] + 1e-12 < 1.0 + spec.q[a] - spec.p[a] {
            return Err(Error::Config(format!(
                "s({}) = {} must be at least 1 + q - p = {}",
                a + 1,
                spec.s[a],
                1.0 + spec.q[a] - spec.p[a]
            )));
        }
    }
    if spec.q.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(
            "q must be non-decreasing in the action".into(),
        ));
    }
    if spec.p.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config(
            "p must be non-increasing in the action".into(),
        ));
    }
    let t = &spec.cost_theta;
    let costs = Mat::from_fn(spec.num_states, a_n, |i, a| {
        let x = (i + 1) as f64;
        if a == 0 {
            -(t[0] + t[1] * x * x * x)
        } else {
            -(t[2] + t[3] * x * x * x)
        }
    });
    let transitions = tridiagonal_transitions(spec.num_states, &spec.p, &spec.q, &spec.s);
    FiniteMdp::new(
        transitions,
        costs,
        Some(spec.discount),
        Some(zeros(spec.num_states)),
        Objective::Minimize,
    )
}

/// The four-state three-action appendix instance, numerically exact.
pub fn build_toy() -> FiniteMdp {
    let rewards = Mat::from_rows(&[
        vec![12.0, 4.0, 0.0],
        vec![16.0, 22.0, 18.0],
        vec![22.0, 23.0, 20.0],
        vec![24.0, 28.0, 30.0],
    ]);
    let p1 = Mat::from_rows(&[
        vec![0.3, 0.4, 0.2, 0.1],
        vec![0.2, 0.4, 0.2, 0.2],
        vec![0.2, 0.4, 0.1, 0.3],
        vec![0.2, 0.3, 0.1, 0.4],
    ]);
    let p2 = Mat::from_rows(&[
        vec![0.3, 0.3, 0.2, 0.2],
        vec![0.2, 0.3, 0.2, 0.3],
        vec![0.2, 0.3, 0.1, 0.4],
        vec![0.2, 0.2, 0.1, 0.5],
    ]);
    let p3 = Mat::from_rows(&[
        vec![0.3, 0.3, 0.1, 0.3],
        vec![0.2, 0.3, 0.1, 0.4],
        vec![0.2, 0.2, 0.1, 0.5],
        vec![0.1, 0.2, 0.1, 0.6],
    ]);
    FiniteMdp::new(
        vec![p1, p2, p3],
        rewards,
        Some(0.9),
        Some(vec![0.0; 4]),
        Objective::Maximize,
    )
    .expect("printed instance is valid")
}

/// Default horizon of the toy instance.
pub const TOY_HORIZON: usize = 100;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{
        finite_horizon_dp, is_monotone, is_monotone_sequence, DiscountMode, MonotoneDirection,
    };
    use crate::structural::{
        check_a1, check_a3, check_corollary1, check_corollary2, check_theorem1, Verdict,
    };

    #[test]
    fn toy_matches_printed_sign_pattern() {
        let mdp = build_toy();
        // r(2,3) - r(2,1) > 0 while r(3,3) - r(3,1) < 0: violates both
        // supermodularity and single crossing for the (1,3) action pair
        assert!(mdp.reward(1, 2) - mdp.reward(1, 0) > 0.0);
        assert!(mdp.reward(2, 2) - mdp.reward(2, 0) < 0.0);
    }

    #[test]
    fn toy_finite_horizon_policy_monotone() {
        let mdp = build_toy();
        let sol = finite_horizon_dp(&mdp, TOY_HORIZON, DiscountMode::Auto).unwrap();
        assert!(is_monotone(&sol.policies[0]));
        assert_eq!(sol.policies[0].as_slice(), &[0, 1, 1, 2]);
    }

    #[test]
    fn sigmoidal_defaults_build_and_certify() {
        let mdp = build_sigmoidal(&SigmoidalSpec::default()).unwrap();
        assert_eq!(mdp.num_states, 201);
        // increasing rewards (A1) but no adjacent-action supermodularity (A3)
        assert_eq!(check_a1(&mdp).verdict, Verdict::Pass);
        assert_eq!(check_a3(&mdp).verdict, Verdict::Fail);
        let report = check_corollary1(&mdp);
        assert!(report.certified, "{}", report.to_text());
    }

    #[test]
    fn sigmoidal_reward_anchors() {
        // the sigmoid rises toward theta_1 = 2 at the top of the state space
        let mdp = build_sigmoidal(&SigmoidalSpec::default()).unwrap();
        let expect_top = 2.0 / (1.0 + (-0.05f64).exp());
        assert!((mdp.reward(200, 0) - expect_top).abs() < 1e-12);
        assert!(mdp.reward(0, 0) < 1e-4, "the sigmoid starts near zero");
        // the two saturating curves cross at exactly x = 150:
        // r(x,3) - r(x,2) = -1.5 + 0.01 x
        assert!((mdp.reward(149, 2) - mdp.reward(149, 1)).abs() < 1e-12);
        assert!((mdp.reward(0, 1) - (5.0 * (1.0 - (-1.0f64 / 80.0).exp()) - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sigmoidal_determinism() {
        let a = build_sigmoidal(&SigmoidalSpec::default()).unwrap();
        let b = build_sigmoidal(&SigmoidalSpec::default()).unwrap();
        assert_eq!(a.rewards, b.rewards);
        assert_eq!(a.transitions, b.transitions);
    }

    #[test]
    fn sigmoidal_rejects_invalid_base_row() {
        let mut spec = SigmoidalSpec::default();
        let mut base = vec![0.0; 201];
        base[0] = 1.0; // no room for the downward epsilon shift at the top entry
        spec.base_row = Some(base);
        assert!(build_sigmoidal(&spec).is_err());
    }

    #[test]
    fn prospect_reward_anchors() {
        let mdp = build_prospect(&ProspectSpec::default()).unwrap();
        let half = mdp.num_states / 2;
        for a in 0..3 {
            assert!((mdp.reward(0, a) + 1.0).abs() < 1e-12, "r(1,a) = -1");
            assert!(mdp.reward(half - 1, a).abs() < 1e-9, "r(X/2,a) = 0");
        }
        let report = check_corollary2(&mdp);
        assert!(report.certified, "{}", report.to_text());
        let common = report.check("common-x*").unwrap();
        assert!(common.detail.contains(&format!("x* = {half}")));
    }

    #[test]
    fn prospect_rejects_odd_states_and_flat_theta() {
        let mut spec = ProspectSpec::default();
        spec.num_states = 99;
        assert!(build_prospect(&spec).is_err());
        let mut spec = ProspectSpec::default();
        spec.theta = vec![1.2, 1.2, 2.0];
        assert!(build_prospect(&spec).is_err());
    }

    #[test]
    fn delta_zero_keeps_rows_equal() {
        let p = vec![0.4, 0.3, 0.2, 0.1];
        let delta = Mat::zeros(4, 2);
        let phi = vec![1.0, 2.0, 3.0, 4.0];
        let mdp = build_delta_perturbation(&p, &delta, &phi).unwrap();
        for a in 0..2 {
            for i in 0..4 {
                assert_eq!(mdp.transitions[a].row(i), &p[..]);
            }
        }
        // any policy is optimal; a monotone selection must exist
        let fp = crate::mdp::value_iteration(&mdp, 1e-8, 10_000).unwrap();
        let sel = crate::mdp::extract_monotone_selection(
            &fp.q,
            1e-6,
            mdp.objective,
            MonotoneDirection::NonDecreasing,
        );
        assert!(sel.is_some());
    }

    #[test]
    fn delta_from_curves_certifies() {
        let p = vec![0.25, 0.2, 0.2, 0.15, 0.1, 0.1];
        let delta = delta_from_sigmoidal(&p);
        let phi: Vec<f64> = (1..=6).map(|x| x as f64).collect();
        let mdp = build_delta_perturbation(&p, &delta, &phi).unwrap();
        let report = check_theorem1(&mdp);
        assert!(report.certified, "{}", report.to_text());
    }

    #[test]
    fn delta_tail_sum_identity() {
        // sum_{j >= l} (e_X - e_1)' e_j is 0 at l = 1 and 1 afterwards
        let x_n = 7;
        let mut shift = vec![0.0; x_n];
        shift[0] = -1.0;
        shift[x_n - 1] = 1.0;
        let tails = crate::dominance::tail_sums(&shift);
        assert_eq!(tails[0], 0.0);
        for l in 1..x_n {
            assert_eq!(tails[l], 1.0);
        }
    }

    #[test]
    fn delta_bound_violation_rejected() {
        let p = vec![0.4, 0.3, 0.2, 0.1];
        let delta = Mat::from_fn(4, 2, |i, _| 0.5 * i as f64); // exceeds cap 0.4
        let phi = vec![1.0, 2.0, 3.0, 4.0];
        assert!(build_delta_perturbation(&p, &delta, &phi).is_err());
    }

    #[test]
    fn perturbed_bidiagonal_first_row_exact() {
        let mdp = build_perturbed_bidiagonal(&PerturbedBidiagonalSpec::default()).unwrap();
        let eps = 1e-3;
        let row = mdp.transitions[0].row(0);
        assert_eq!(row, &[1.0 - eps, 0.0, 0.0, 0.0, 0.0, eps]);
        // action 2 carries no perturbation (A - a = 0)
        assert_eq!(mdp.transitions[1].get(0, 0), 1.0);
    }

    #[test]
    fn perturbed_bidiagonal_epsilon_guard() {
        let mut spec = PerturbedBidiagonalSpec::default();
        spec.epsilon = 0.05; // >= theta gap 0.02
        spec.theta = vec![0.3, 0.32];
        assert!(build_perturbed_bidiagonal(&spec).is_err());
        spec.allow_supermodular = true;
        assert!(build_perturbed_bidiagonal(&spec).is_ok());
    }

    #[test]
    fn concave_bidiagonal_solves_to_decreasing_policy() {
        let spec = ConcaveBidiagonalSpec::default();
        let mdp = build_concave_bidiagonal(&spec).unwrap();
        let sol = finite_horizon_dp(&mdp, spec.horizon, DiscountMode::Auto).unwrap();
        assert!(is_monotone_sequence(
            &sol.policies,
            MonotoneDirection::NonIncreasing
        ));
    }

    #[test]
    fn tridiagonal_solves_to_increasing_policy() {
        let spec = TridiagonalSpec::default();
        let mdp = build_tridiagonal(&spec).unwrap();
        let sol = finite_horizon_dp(&mdp, spec.horizon, DiscountMode::Auto).unwrap();
        assert!(is_monotone_sequence(
            &sol.policies,
            MonotoneDirection::NonDecreasing
        ));
    }
}
