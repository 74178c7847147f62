//! Finite-state finite-action MDPs and their exact dynamic-programming solvers.
//!
//! States and actions are 0-based throughout the API; reports and CSV output
//! render them 1-based.

use crate::error::{Error, Result};
use crate::mat::Mat;
use nalgebra::{DMatrix, DVector};

/// Sense of the optimization: rewards are maximized, costs are minimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

impl Objective {
    /// True when `a` is strictly better than `b` under this sense.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Maximize => a > b,
            Objective::Minimize => a < b,
        }
    }

    pub fn opt(self, values: &[f64]) -> f64 {
        let mut best = values[0];
        for &v in &values[1..] {
            if self.better(v, best) {
                best = v;
            }
        }
        best
    }

    /// Smallest index attaining the optimum (deterministic tie-break).
    pub fn argopt(self, values: &[f64]) -> usize {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if self.better(v, values[best]) {
                best = i;
            }
        }
        best
    }
}

/// Tolerance for row-stochasticity checks at construction.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Finite MDP: `A` row-stochastic transition matrices, an `X x A`
/// reward (or cost) table, and optionally a discount factor and a
/// terminal-value vector.
#[derive(Clone, Debug)]
pub struct FiniteMdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// One `X x X` matrix per action.
    pub transitions: Vec<Mat>,
    /// `X x A`; costs when `objective` is `Minimize`.
    pub rewards: Mat,
    pub discount: Option<f64>,
    pub terminal: Option<Vec<f64>>,
    pub objective: Objective,
}

impl FiniteMdp {
    pub fn new(
        transitions: Vec<Mat>,
        rewards: Mat,
        discount: Option<f64>,
        terminal: Option<Vec<f64>>,
        objective: Objective,
    ) -> Result<Self> {
        let num_states = rewards.nrows();
        let num_actions = rewards.ncols();
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidModel("empty state or action space".into()));
        }
        if transitions.len() != num_actions {
            return Err(Error::InvalidModel(format!(
                "expected {} transition matrices, got {}",
                num_actions,
                transitions.len()
            )));
        }
        for (a, p) in transitions.iter().enumerate() {
            if p.nrows() != num_states || p.ncols() != num_states {
                return Err(Error::InvalidModel(format!(
                    "transitions[{a}] is {}x{}, expected {num_states}x{num_states}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            for i in 0..num_states {
                let mut sum = 0.0;
                for j in 0..num_states {
                    let v = p.get(i, j);
                    if !(0.0 - ROW_SUM_TOL..=1.0 + ROW_SUM_TOL).contains(&v) {
                        return Err(Error::InvalidModel(format!(
                            "transitions[{a}] row {} has entry {v} outside [0,1] at column {}",
                            i + 1,
                            j + 1
                        )));
                    }
                }
                for j in 0..num_states {
                    sum += p.get(i, j);
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "transitions[{a}] row {} sums to {sum}, not 1",
                        i + 1
                    )));
                }
            }
        }
        if rewards.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite reward entry".into()));
        }
        if let Some(rho) = discount {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "discount {rho} must lie strictly inside (0,1)"
                )));
            }
        }
        if let Some(t) = &terminal {
            if t.len() != num_states {
                return Err(Error::InvalidModel(format!(
                    "terminal vector has length {}, expected {num_states}",
                    t.len()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("non-finite terminal entry".into()));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            discount,
            terminal,
            objective,
        })
    }

    #[inline]
    pub fn reward(&self, x: usize, a: usize) -> f64 {
        self.rewards.get(x, a)
    }

    #[inline]
    pub fn transition(&self, a: usize) -> &Mat {
        &self.transitions[a]
    }

    /// Restriction to a single action (used by oracle tests).
    pub fn restrict_to_action(&self, a: usize) -> FiniteMdp {
        let rewards = Mat::from_fn(self.num_states, 1, |x, _| self.reward(x, a));
        FiniteMdp {
            num_states: self.num_states,
            num_actions: 1,
            transitions: vec![self.transitions[a].clone()],
            rewards,
            discount: self.discount,
            terminal: self.terminal.clone(),
            objective: self.objective,
        }
    }
}

/// Stationary deterministic policy: one 0-based action per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy(pub Vec<usize>);

impl Policy {
    pub fn action(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Direction of a monotone policy in the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotoneDirection {
    NonDecreasing,
    NonIncreasing,
}

/// True iff the policy is non-decreasing in the state.
pub fn is_monotone(policy: &Policy) -> bool {
    is_monotone_in(policy, MonotoneDirection::NonDecreasing)
}

pub fn is_monotone_in(policy: &Policy, direction: MonotoneDirection) -> bool {
    policy.0.windows(2).all(|w| match direction {
        MonotoneDirection::NonDecreasing => w[1] >= w[0],
        MonotoneDirection::NonIncreasing => w[1] <= w[0],
    })
}

/// True iff every stage policy in the sequence is monotone.
pub fn is_monotone_sequence(policies: &[Policy], direction: MonotoneDirection) -> bool {
    policies.iter().all(|p| is_monotone_in(p, direction))
}

/// Whether the backward recursion multiplies the expectation term by the
/// discount factor. `Auto` discounts exactly when the model carries one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiscountMode {
    #[default]
    Auto,
    Discounted,
    Undiscounted,
}

/// Finite-horizon solution indexed like the backward recursion: stage `k = 0`
/// is the first decision, `values` has one extra entry holding the terminal.
#[derive(Clone, Debug)]
pub struct DpSolution {
    pub q: Vec<Mat>,
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<Policy>,
}

fn backup_factor(mdp: &FiniteMdp, mode: DiscountMode) -> Result<f64> {
    match mode {
        DiscountMode::Auto => Ok(mdp.discount.unwrap_or(1.0)),
        DiscountMode::Undiscounted => Ok(1.0),
        DiscountMode::Discounted => mdp
            .discount
            .ok_or_else(|| Error::Config("discounted backup requested but no discount set".into())),
    }
}

fn one_backup(mdp: &FiniteMdp, v: &[f64], factor: f64) -> (Mat, Vec<f64>, Policy) {
    let (x_n, a_n) = (mdp.num_states, mdp.num_actions);
    let mut q = Mat::zeros(x_n, a_n);
    for a in 0..a_n {
        let pv = mdp.transitions[a].mul_vec(v);
        for x in 0..x_n {
            q.set(x, a, mdp.reward(x, a) + factor * pv[x]);
        }
    }
    let mut value = vec![0.0; x_n];
    let mut policy = vec![0usize; x_n];
    for x in 0..x_n {
        let row = q.row(x);
        let a = mdp.objective.argopt(row);
        policy[x] = a;
        value[x] = row[a];
    }
    (q, value, Policy(policy))
}

/// Backward induction over `horizon` stages starting from the terminal vector.
///
/// `horizon = 0` returns the terminal values only. Whether the expectation is
/// discounted is controlled by `mode` (the recursion itself is undiscounted;
/// discounted-with-horizon examples multiply the expectation by the factor).
pub fn finite_horizon_dp(
    mdp: &FiniteMdp,
    horizon: usize,
    mode: DiscountMode,
) -> Result<DpSolution> {
    let terminal = mdp
        .terminal
        .clone()
        .ok_or_else(|| Error::Config("finite-horizon DP requires a terminal vector".into()))?;
    let factor = backup_factor(mdp, mode)?;
    let mut values = vec![terminal];
    let mut qs = Vec::with_capacity(horizon);
    let mut policies = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (q, v, pol) = one_backup(mdp, &values[0], factor);
        values.insert(0, v);
        qs.insert(0, q);
        policies.insert(0, pol);
    }
    Ok(DpSolution {
        q: qs,
        values,
        policies,
    })
}

/// Fixed-point solution of the discounted Bellman equation.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub q: Mat,
    pub value: Vec<f64>,
    pub policy: Policy,
    pub sweeps: usize,
    pub residual: f64,
}

pub const DEFAULT_VI_TOL: f64 = 1e-8;

/// Value iteration to sup-norm Bellman residual `tol * (1-rho) / (2 rho)`,
/// with the contraction property checked on every sweep.
pub fn value_iteration(mdp: &FiniteMdp, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    let rho = mdp
        .discount
        .ok_or_else(|| Error::Config("value iteration requires a discount factor".into()))?;
    if tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let threshold = tol * (1.0 - rho) / (2.0 * rho);
    let mut v = vec![0.0; mdp.num_states];
    let mut prev_delta: Option<f64> = None;
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_iter {
        let (_, v_next, _) = one_backup(mdp, &v, rho);
        let delta = sup_norm_diff(&v_next, &v);
        if let Some(pd) = prev_delta {
            // contraction check with a small floating-point allowance
            let scale = 1.0 + v_next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if delta > rho * pd + 1e-12 * scale {
                return Err(Error::Numerical(format!(
                    "contraction violated at sweep {sweep}: {delta:.3e} > rho * {pd:.3e}"
                )));
            }
        }
        prev_delta = Some(delta);
        v = v_next;
        residual = delta;
        if delta <= threshold {
            let (q, value, policy) = one_backup(mdp, &v, rho);
            return Ok(FixedPoint {
                q,
                value,
                policy,
                sweeps: sweep,
                residual,
            });
        }
    }
    Err(Error::NoConvergence { max_iter, residual })
}

fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Exact policy value: solves `J = r_mu + rho P_mu J` directly.
pub fn policy_evaluation(mdp: &FiniteMdp, policy: &Policy) -> Result<Vec<f64>> {
    let rho = mdp
        .discount
        .ok_or_else(|| Error::Config("policy evaluation requires a discount factor".into()))?;
    let n = mdp.num_states;
    if policy.len() != n {
        return Err(Error::Config(format!(
            "policy has length {}, expected {n}",
            policy.len()
        )));
    }
    if policy.0.iter().any(|&a| a >= mdp.num_actions) {
        return Err(Error::Config("policy action out of range".into()));
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for x in 0..n {
        let a = policy.action(x);
        let row = mdp.transitions[a].row(x);
        for j in 0..n {
            m[(x, j)] -= rho * row[j];
        }
        r[x] = mdp.reward(x, a);
    }
    let j = m
        .clone()
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Numerical("singular policy-evaluation system".into()))?;
    // residual check: the solve must reproduce the fixed point
    let res = (&m * &j - &r).amax();
    let scale = 1.0 + j.amax();
    if res > 1e-8 * scale {
        return Err(Error::Numerical(format!(
            "policy-evaluation residual {res:.3e} exceeds tolerance"
        )));
    }
    Ok(j.iter().copied().collect())
}

pub const DEFAULT_BRUTE_FORCE_GUARD: u128 = 1_000_000;
pub const DEFAULT_OPTIMUM_CLASS_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct BruteForceOutcome {
    /// Component-wise optimal value over all stationary policies.
    pub optimum: Vec<f64>,
    /// Every policy whose value vector is within `tolerance` of the optimum.
    pub optimal_policies: Vec<Policy>,
    pub num_policies: u128,
    pub tolerance: f64,
}

/// Exhaustive enumeration of all `A^X` stationary policies. Refuses when the
/// count exceeds `size_guard`.
pub fn brute_force_optimal(mdp: &FiniteMdp, size_guard: u128) -> Result<BruteForceOutcome> {
    brute_force_optimal_with_tol(mdp, size_guard, DEFAULT_OPTIMUM_CLASS_TOL)
}

pub fn brute_force_optimal_with_tol(
    mdp: &FiniteMdp,
    size_guard: u128,
    tolerance: f64,
) -> Result<BruteForceOutcome> {
    let count = (mdp.num_actions as u128)
        .checked_pow(mdp.num_states as u32)
        .ok_or(Error::GuardExceeded {
            required: u128::MAX,
            guard: size_guard,
        })?;
    if count > size_guard {
        return Err(Error::GuardExceeded {
            required: count,
            guard: size_guard,
        });
    }
    let mut optimum: Option<Vec<f64>> = None;
    for_each_policy(mdp, |policy| {
        let j = policy_evaluation(mdp, policy)?;
        match &mut optimum {
            None => optimum = Some(j),
            Some(best) => {
                for (b, v) in best.iter_mut().zip(&j) {
                    if mdp.objective.better(*v, *b) {
                        *b = *v;
                    }
                }
            }
        }
        Ok(())
    })?;
    let optimum = optimum.expect("at least one policy");
    let mut optimal_policies = Vec::new();
    for_each_policy(mdp, |policy| {
        let j = policy_evaluation(mdp, policy)?;
        if j.iter()
            .zip(&optimum)
            .all(|(v, o)| (v - o).abs() <= tolerance)
        {
            optimal_policies.push(policy.clone());
        }
        Ok(())
    })?;
    Ok(BruteForceOutcome {
        optimum,
        optimal_policies,
        num_policies: count,
        tolerance,
    })
}

fn for_each_policy(mdp: &FiniteMdp, mut f: impl FnMut(&Policy) -> Result<()>) -> Result<()> {
    let mut actions = vec![0usize; mdp.num_states];
    loop {
        f(&Policy(actions.clone()))?;
        // odometer increment in base A
        let mut x = 0;
        loop {
            if x == mdp.num_states {
                return Ok(());
            }
            actions[x] += 1;
            if actions[x] < mdp.num_actions {
                break;
            }
            actions[x] = 0;
            x += 1;
        }
    }
}

/// Greedy sweep that constructs a monotone selection from the argopt sets of
/// `q` when one exists: at each state pick the smallest action within
/// `tie_tol` of the row optimum that is not below the previous choice.
pub fn extract_monotone_selection(
    q: &Mat,
    tie_tol: f64,
    objective: Objective,
    direction: MonotoneDirection,
) -> Option<Policy> {
    let states: Vec<usize> = match direction {
        MonotoneDirection::NonDecreasing => (0..q.nrows()).collect(),
        MonotoneDirection::NonIncreasing => (0..q.nrows()).rev().collect(),
    };
    let mut actions = vec![0usize; q.nrows()];
    let mut prev = 0usize;
    for (rank, &x) in states.iter().enumerate() {
        let row = q.row(x);
        let best = objective.opt(row);
        let within = |a: usize| match objective {
            Objective::Maximize => row[a] >= best - tie_tol,
            Objective::Minimize => row[a] <= best + tie_tol,
        };
        let floor = if rank == 0 { 0 } else { prev };
        let choice = (floor..row.len()).find(|&a| within(a))?;
        actions[x] = choice;
        prev = choice;
    }
    Some(Policy(actions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Mat {
        Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    fn constant_reward(x: usize, a: usize, c: f64) -> Mat {
        Mat::from_fn(x, a, |_, _| c)
    }

    #[test]
    fn horizon_zero_returns_terminal() {
        let mdp = FiniteMdp::new(
            vec![identity(3)],
            constant_reward(3, 1, 5.0),
            None,
            Some(vec![1.0, 2.0, 3.0]),
            Objective::Maximize,
        )
        .unwrap();
        let sol = finite_horizon_dp(&mdp, 0, DiscountMode::Auto).unwrap();
        assert_eq!(sol.values, vec![vec![1.0, 2.0, 3.0]]);
        assert!(sol.q.is_empty() && sol.policies.is_empty());
    }

    #[test]
    fn missing_terminal_is_config_error() {
        let mdp = FiniteMdp::new(
            vec![identity(2)],
            constant_reward(2, 1, 0.0),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap();
        assert!(matches!(
            finite_horizon_dp(&mdp, 3, DiscountMode::Auto),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn absorbing_identity_three_stages() {
        let mdp = FiniteMdp::new(
            vec![identity(2)],
            constant_reward(2, 1, 0.0),
            None,
            Some(vec![0.0, 1.0]),
            Objective::Maximize,
        )
        .unwrap();
        let sol = finite_horizon_dp(&mdp, 3, DiscountMode::Undiscounted).unwrap();
        assert_eq!(sol.values[0], vec![0.0, 1.0]);
    }

    #[test]
    fn value_iteration_geometric_series() {
        // X=3, A=1, r = 1, rho = 0.9 -> V = 1/(1-rho) = 10
        let p = Mat::from_fn(3, 3, |_, _| 1.0 / 3.0);
        let mdp = FiniteMdp::new(
            vec![p],
            constant_reward(3, 1, 1.0),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap();
        let fp = value_iteration(&mdp, 1e-6, 10_000).unwrap();
        for v in fp.value {
            assert!((v - 10.0).abs() < 1e-6);
        }
    }

    #[test]
    fn value_iteration_reports_nonconvergence() {
        let p = Mat::from_fn(2, 2, |_, _| 0.5);
        let mdp = FiniteMdp::new(
            vec![p],
            constant_reward(2, 1, 1.0),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap();
        match value_iteration(&mdp, 1e-10, 3) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual.is_finite()),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn tie_break_takes_smallest_action() {
        // identical reward columns and identical transitions: greedy must be
        // action 0 everywhere
        let p = Mat::from_fn(3, 3, |_, _| 1.0 / 3.0);
        let r = Mat::from_fn(3, 2, |x, _| x as f64);
        let mdp =
            FiniteMdp::new(vec![p.clone(), p], r, Some(0.9), None, Objective::Maximize).unwrap();
        let fp = value_iteration(&mdp, 1e-8, 10_000).unwrap();
        assert_eq!(fp.policy.0, vec![0, 0, 0]);
    }

    #[test]
    fn policy_evaluation_fixed_point() {
        // P = I, r = c => J = c/(1-rho) = 10c
        let c = 3.0;
        let mdp = FiniteMdp::new(
            vec![identity(4)],
            constant_reward(4, 1, c),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap();
        let j = policy_evaluation(&mdp, &Policy(vec![0; 4])).unwrap();
        for v in j {
            assert!((v - 10.0 * c).abs() < 1e-9);
        }
    }

    #[test]
    fn single_action_brute_force_unique() {
        let p = Mat::from_fn(2, 2, |_, _| 0.5);
        let mdp = FiniteMdp::new(
            vec![p],
            constant_reward(2, 1, 1.0),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap();
        let out = brute_force_optimal(&mdp, 100).unwrap();
        assert_eq!(out.optimal_policies.len(), 1);
        assert_eq!(out.num_policies, 1);
    }

    #[test]
    fn brute_force_guard_refuses() {
        let p = Mat::from_fn(3, 3, |_, _| 1.0 / 3.0);
        let r = Mat::from_fn(3, 2, |_, _| 0.0);
        let mdp =
            FiniteMdp::new(vec![p.clone(), p], r, Some(0.9), None, Objective::Maximize).unwrap();
        match brute_force_optimal(&mdp, 7) {
            Err(Error::GuardExceeded { required, guard }) => {
                assert_eq!(required, 8);
                assert_eq!(guard, 7);
            }
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn monotone_predicates() {
        assert!(is_monotone(&Policy(vec![0, 0, 1, 1])));
        assert!(!is_monotone(&Policy(vec![0, 1, 0])));
        assert!(is_monotone_in(
            &Policy(vec![2, 1, 1, 0]),
            MonotoneDirection::NonIncreasing
        ));
    }

    #[test]
    fn extract_monotone_unique_argmax() {
        let q = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let pol = extract_monotone_selection(
            &q,
            1e-9,
            Objective::Maximize,
            MonotoneDirection::NonDecreasing,
        )
        .unwrap();
        assert_eq!(pol.0, vec![0, 1]);
    }

    #[test]
    fn extract_monotone_full_ties_gives_smallest() {
        let q = Mat::from_fn(3, 3, |_, _| 2.0);
        let pol = extract_monotone_selection(
            &q,
            1e-9,
            Objective::Maximize,
            MonotoneDirection::NonDecreasing,
        )
        .unwrap();
        assert_eq!(pol.0, vec![0, 0, 0]);
    }

    #[test]
    fn extract_monotone_reports_absence() {
        // argmax strictly decreasing in the state and no ties
        let q = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(extract_monotone_selection(
            &q,
            1e-9,
            Objective::Maximize,
            MonotoneDirection::NonDecreasing
        )
        .is_none());
    }

    #[test]
    fn invalid_rows_rejected() {
        let bad = Mat::from_rows(&[vec![0.6, 0.3], vec![0.5, 0.5]]);
        let err = FiniteMdp::new(
            vec![bad],
            constant_reward(2, 1, 0.0),
            Some(0.9),
            None,
            Objective::Maximize,
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }
}
