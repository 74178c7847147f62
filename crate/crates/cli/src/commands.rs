//! Subcommand implementations.

use crate::io_util::{from_mdp_error, input_error, read_to_string, write_atomic, CliResult};
use monotone_mdp::allocation::{self, build_ross_case, AllocationModel, RossCase};
use monotone_mdp::generators::{
    build_concave_bidiagonal, build_delta_perturbation, build_perturbed_bidiagonal, build_prospect,
    build_sigmoidal, build_toy, build_tridiagonal, delta_from_sigmoidal, ConcaveBidiagonalSpec,
    PerturbedBidiagonalSpec, ProspectSpec, SigmoidalSpec, TridiagonalSpec, TOY_HORIZON,
};
use monotone_mdp::model::{AllocationDocument, MdpDocument, ModelDocument};
use monotone_mdp::rl::{
    q_learning, rectified_l1_penalty, threshold_search, QLearningConfig, ThresholdSearchConfig,
};
use monotone_mdp::structural::{
    check_corollary1, check_corollary2, check_corollary3, check_corollary4, check_theorem1,
    check_theorem2, find_common_schedule, reward_id_intervals, transition_id_intervals,
    CostShapeVariant, ScheduleMode, ScheduleOutcome,
};
use monotone_mdp::{
    brute_force_optimal, finite_horizon_dp, is_monotone, policy_evaluation, value_iteration,
    DiscountMode, FiniteMdp, Mat, Policy,
};
use std::fmt::Write as _;
use std::path::Path;

/// Parsed input: either a plain MDP or an allocation model plus its MDP form.
enum LoadedModel {
    Mdp(FiniteMdp, Option<usize>),
    Allocation(AllocationModel),
}

impl LoadedModel {
    fn mdp(&self) -> CliResult<FiniteMdp> {
        match self {
            LoadedModel::Mdp(m, _) => Ok(m.clone()),
            LoadedModel::Allocation(a) => allocation::to_mdp(a).map_err(from_mdp_error),
        }
    }

    fn default_horizon(&self) -> Option<usize> {
        match self {
            LoadedModel::Mdp(_, h) => *h,
            LoadedModel::Allocation(a) => Some(a.horizon),
        }
    }
}

fn load(path: &Path) -> CliResult<LoadedModel> {
    let text = read_to_string(path)?;
    let doc = ModelDocument::from_json(&text).map_err(from_mdp_error)?;
    match doc {
        ModelDocument::Mdp(d) => {
            let mdp = d.to_mdp().map_err(from_mdp_error)?;
            Ok(LoadedModel::Mdp(mdp, d.horizon))
        }
        ModelDocument::Allocation(d) => Ok(LoadedModel::Allocation(
            d.to_model().map_err(from_mdp_error)?,
        )),
    }
}

fn env_tol() -> Option<f64> {
    std::env::var("MONOMDP_TOL").ok()?.parse().ok()
}

pub fn solve(
    input: &Path,
    horizon: Option<usize>,
    tol: Option<f64>,
    max_iter: usize,
    discounted_backup: Option<bool>,
    out: &Path,
) -> CliResult {
    if horizon.is_some() && tol.is_some() {
        return Err(input_error(anyhow::anyhow!(
            "--horizon and --tol are mutually exclusive"
        )));
    }
    let model = load(input)?;
    let mdp = model.mdp()?;
    let mode = match discounted_backup {
        None => DiscountMode::Auto,
        Some(true) => DiscountMode::Discounted,
        Some(false) => DiscountMode::Undiscounted,
    };
    let mut q_csv = String::from("k,x,a,Q\n");
    let mut v_csv = String::from("k,x,V,mu\n");
    if let Some(n) = horizon.or_else(|| {
        if tol.is_none() {
            model.default_horizon()
        } else {
            None
        }
    }) {
        let sol = finite_horizon_dp(&mdp, n, mode).map_err(from_mdp_error)?;
        for (k, q) in sol.q.iter().enumerate() {
            for x in 0..mdp.num_states {
                for a in 0..mdp.num_actions {
                    writeln!(q_csv, "{k},{},{},{}", x + 1, a + 1, q.get(x, a)).unwrap();
                }
            }
        }
        for (k, v) in sol.values.iter().enumerate() {
            for x in 0..mdp.num_states {
                if k < sol.policies.len() {
                    writeln!(
                        v_csv,
                        "{k},{},{},{}",
                        x + 1,
                        v[x],
                        sol.policies[k].action(x) + 1
                    )
                    .unwrap();
                } else {
                    // terminal row has no decision
                    writeln!(v_csv, "{k},{},{},", x + 1, v[x]).unwrap();
                }
            }
        }
    } else {
        let tol = tol
            .or_else(env_tol)
            .unwrap_or(monotone_mdp::mdp::DEFAULT_VI_TOL);
        let fp = value_iteration(&mdp, tol, max_iter).map_err(from_mdp_error)?;
        for x in 0..mdp.num_states {
            for a in 0..mdp.num_actions {
                writeln!(q_csv, "0,{},{},{}", x + 1, a + 1, fp.q.get(x, a)).unwrap();
            }
        }
        for x in 0..mdp.num_states {
            writeln!(
                v_csv,
                "0,{},{},{}",
                x + 1,
                fp.value[x],
                fp.policy.action(x) + 1
            )
            .unwrap();
        }
    }
    write_atomic(&out.join("q.csv"), &q_csv)?;
    write_atomic(&out.join("value.csv"), &v_csv)?;
    println!(
        "wrote {} and {}",
        out.join("q.csv").display(),
        out.join("value.csv").display()
    );
    Ok(())
}

pub fn check(input: &Path, theorem: &str, mode: &str, out: Option<&Path>) -> CliResult {
    let model = load(input)?;
    let schedule_mode = match mode {
        "uniform" => ScheduleMode::Uniform,
        "pairwise" => ScheduleMode::Pairwise,
        other => {
            return Err(input_error(anyhow::anyhow!(
                "unknown mode \"{other}\" (uniform | pairwise)"
            )))
        }
    };
    let text = match theorem {
        "thm3" => {
            let LoadedModel::Allocation(alloc) = &model else {
                return Err(input_error(anyhow::anyhow!(
                    "--theorem thm3 needs an allocation-kind document"
                )));
            };
            let mut text = allocation::check_maincost(alloc).to_text();
            text.push('\n');
            text.push_str(&allocation::check_stronger(alloc).to_text());
            text
        }
        _ => {
            let mdp = model.mdp()?;
            let mut report = match theorem {
                "1" => check_theorem1(&mdp),
                "2" => check_theorem2(&mdp, CostShapeVariant::Theorem2),
                "cor1" => check_corollary1(&mdp),
                "cor2" => check_corollary2(&mdp),
                "cor3" => check_corollary3(&mdp),
                "cor4" => check_corollary4(&mdp),
                "cor5" => check_theorem2(&mdp, CostShapeVariant::Corollary5),
                other => {
                    return Err(input_error(anyhow::anyhow!(
                        "unknown theorem \"{other}\" (1 | 2 | cor1..cor5 | thm3)"
                    )))
                }
            };
            if theorem == "1" && schedule_mode == ScheduleMode::Pairwise {
                // re-run the schedule search in the requested mode
                let beta = reward_id_intervals(&mdp);
                let alpha =
                    transition_id_intervals(&mdp, monotone_mdp::dominance::StochasticOrder::First);
                match find_common_schedule(&beta, &alpha, ScheduleMode::Pairwise)
                    .map_err(from_mdp_error)?
                {
                    ScheduleOutcome::Feasible(s) => {
                        report.notes.push(format!("pairwise mode requested: {s}"));
                        report.schedule = Some(s);
                    }
                    ScheduleOutcome::Infeasible(w) => {
                        report
                            .notes
                            .push(format!("pairwise mode requested but infeasible: {w}"));
                    }
                }
            }
            report.to_text()
        }
    };
    print!("{text}");
    if let Some(path) = out {
        write_atomic(path, &text)?;
    }
    Ok(())
}

#[derive(Default)]
pub struct ExampleOverrides {
    pub num_states: Option<usize>,
    pub horizon: Option<usize>,
    pub discount: Option<f64>,
    pub epsilon: Option<f64>,
    pub split: Option<usize>,
    pub theta1: Option<f64>,
}

fn example_document(name: &str, ov: &ExampleOverrides) -> CliResult<ModelDocument> {
    let doc = match name {
        "toy" => {
            let mdp = build_toy();
            ModelDocument::Mdp(MdpDocument::from_mdp(
                &mdp,
                Some(ov.horizon.unwrap_or(TOY_HORIZON)),
            ))
        }
        "sigmoidal" | "ex1" => {
            let mut spec = ov
                .num_states
                .map(SigmoidalSpec::for_states)
                .unwrap_or_default();
            if let Some(h) = ov.horizon {
                spec.horizon = h;
            }
            if let Some(d) = ov.discount {
                spec.discount = d;
            }
            if let Some(e) = ov.epsilon {
                spec.epsilon = e;
            }
            if let Some(s) = ov.split {
                spec.split = s;
            }
            let mdp = build_sigmoidal(&spec).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(spec.horizon)))
        }
        "prospect" => {
            let mut spec = ov
                .num_states
                .map(ProspectSpec::for_states)
                .unwrap_or_default();
            if let Some(h) = ov.horizon {
                spec.horizon = h;
            }
            if let Some(d) = ov.discount {
                spec.discount = d;
            }
            if let Some(e) = ov.epsilon {
                spec.epsilon = e;
            }
            let mdp = build_prospect(&spec).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(spec.horizon)))
        }
        "delta" => {
            let x_n = ov.num_states.unwrap_or(6);
            let p: Vec<f64> = {
                // gently decaying base distribution
                let raw: Vec<f64> = (0..x_n).map(|i| 1.0 / (1.0 + i as f64 / 2.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            };
            let delta = delta_from_sigmoidal(&p);
            let phi: Vec<f64> = (1..=x_n).map(|x| x as f64).collect();
            let mdp = build_delta_perturbation(&p, &delta, &phi).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(ov.horizon.unwrap_or(100))))
        }
        "ex3" | "perturbed-bidiagonal" => {
            let mut spec = PerturbedBidiagonalSpec::default();
            if let Some(h) = ov.horizon {
                spec.horizon = h;
            }
            if let Some(d) = ov.discount {
                spec.discount = d;
            }
            if let Some(e) = ov.epsilon {
                let gap = 20.0 * e;
                spec.theta = vec![0.3, 0.3 + gap];
                spec.epsilon = e;
            }
            let mdp = build_perturbed_bidiagonal(&spec).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(spec.horizon)))
        }
        "bidiag" | "concave-bidiagonal" => {
            let mut spec = ConcaveBidiagonalSpec::default();
            if let Some(x) = ov.num_states {
                spec.num_states = x;
            }
            if let Some(h) = ov.horizon {
                spec.horizon = h;
            }
            if let Some(d) = ov.discount {
                spec.discount = d;
            }
            let mdp = build_concave_bidiagonal(&spec).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(spec.horizon)))
        }
        "tridiag" => {
            let mut spec = TridiagonalSpec::default();
            if let Some(x) = ov.num_states {
                spec.num_states = x;
            }
            if let Some(h) = ov.horizon {
                spec.horizon = h;
            }
            if let Some(d) = ov.discount {
                spec.discount = d;
            }
            let mdp = build_tridiagonal(&spec).map_err(from_mdp_error)?;
            ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(spec.horizon)))
        }
        "ross-i" | "ross-ii" => {
            let mut model = build_ross_case(if name == "ross-i" {
                RossCase::I
            } else {
                RossCase::II
            });
            if let Some(h) = ov.horizon {
                model.horizon = h;
            }
            if let Some(t) = ov.theta1 {
                model = AllocationModel::new(
                    model.epsilon,
                    model.gamma.clone(),
                    model.effort_costs.clone(),
                    model.terminal_penalty.clone(),
                    t,
                    model.horizon,
                )
                .map_err(from_mdp_error)?;
            }
            ModelDocument::Allocation(AllocationDocument::from_model(&model))
        }
        other => return Err(input_error(anyhow::anyhow!("unknown example \"{other}\""))),
    };
    Ok(doc)
}

pub fn example(name: &str, ov: ExampleOverrides, out: &Path) -> CliResult {
    let doc = example_document(name, &ov)?;
    write_atomic(out, &doc.to_json())?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn figure(name: &str, out: &Path) -> CliResult {
    // first-stage Q (or transformed-Q for the allocation cases) differences
    let (q0, num_states, num_actions): (Mat, usize, usize) = match name {
        "ross-i" | "ross-ii" => {
            let model = build_ross_case(if name == "ross-i" {
                RossCase::I
            } else {
                RossCase::II
            });
            let sol = allocation::modified_dp(&model, model.horizon);
            (sol.q_bar[0].clone(), model.num_states, model.num_actions)
        }
        _ => {
            let (mdp, horizon) = match name {
                "ex1" => {
                    let spec = SigmoidalSpec::default();
                    (
                        build_sigmoidal(&spec).map_err(from_mdp_error)?,
                        spec.horizon,
                    )
                }
                "toy" => (build_toy(), TOY_HORIZON),
                "ex3" => {
                    let spec = PerturbedBidiagonalSpec::default();
                    (
                        build_perturbed_bidiagonal(&spec).map_err(from_mdp_error)?,
                        spec.horizon,
                    )
                }
                "bidiag" => {
                    let spec = ConcaveBidiagonalSpec::default();
                    (
                        build_concave_bidiagonal(&spec).map_err(from_mdp_error)?,
                        spec.horizon,
                    )
                }
                "tridiag" => {
                    let spec = TridiagonalSpec::default();
                    (
                        build_tridiagonal(&spec).map_err(from_mdp_error)?,
                        spec.horizon,
                    )
                }
                other => return Err(input_error(anyhow::anyhow!("unknown figure \"{other}\""))),
            };
            let sol =
                finite_horizon_dp(&mdp, horizon, DiscountMode::Auto).map_err(from_mdp_error)?;
            (sol.q[0].clone(), mdp.num_states, mdp.num_actions)
        }
    };
    let mut csv = String::from("x");
    for a in 2..=num_actions {
        write!(csv, ",dQ_a{a}").unwrap();
    }
    csv.push('\n');
    for x in 0..num_states {
        write!(csv, "{}", x + 1).unwrap();
        for a in 1..num_actions {
            write!(csv, ",{}", q0.get(x, a) - q0.get(x, 0)).unwrap();
        }
        csv.push('\n');
    }
    write_atomic(out, &csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn rl(
    input: &Path,
    algo: &str,
    seed: u64,
    steps: Option<usize>,
    budget: Option<usize>,
    lambda: f64,
    horizon: Option<usize>,
    out: &Path,
) -> CliResult {
    let model = load(input)?;
    let mdp = model.mdp()?;
    match algo {
        "qlearn" => {
            let config = QLearningConfig {
                steps: steps.unwrap_or(500_000),
                ..Default::default()
            };
            let outcome = q_learning(&mdp, seed, &config).map_err(from_mdp_error)?;
            let mut curve = String::from("step,estimated_value,penalty\n");
            for p in &outcome.curve {
                writeln!(curve, "{},{},{}", p.step, p.estimated_value, p.penalty).unwrap();
            }
            write_atomic(&out.join("curve.csv"), &curve)?;
            let mut q_csv = String::from("x,a,Q\n");
            for x in 0..mdp.num_states {
                for a in 0..mdp.num_actions {
                    writeln!(q_csv, "{},{},{}", x + 1, a + 1, outcome.q.get(x, a)).unwrap();
                }
            }
            write_atomic(&out.join("q.csv"), &q_csv)?;
            write_policy_csv(&out.join("policy.csv"), &outcome.policy)?;
            println!(
                "greedy policy: {:?} (penalty {})",
                one_based(&outcome.policy),
                rectified_l1_penalty(&outcome.policy)
            );
        }
        "threshold" => {
            let config = ThresholdSearchConfig {
                budget_episodes: budget.unwrap_or(100_000),
                horizon: horizon.unwrap_or(200),
                lambda,
                ..Default::default()
            };
            let outcome = threshold_search(&mdp, seed, &config).map_err(from_mdp_error)?;
            let mut curve = String::from("step,estimated_value,penalty\n");
            for p in &outcome.curve {
                writeln!(curve, "{},{},{}", p.step, p.estimated_value, p.penalty).unwrap();
            }
            write_atomic(&out.join("curve.csv"), &curve)?;
            let mut cands = String::from("thresholds,value\n");
            for (tp, v) in &outcome.evaluated {
                let ts: Vec<String> = tp
                    .thresholds()
                    .iter()
                    .map(|t| (t + 1).to_string())
                    .collect();
                writeln!(cands, "{},{v}", ts.join(";")).unwrap();
            }
            write_atomic(&out.join("candidates.csv"), &cands)?;
            write_policy_csv(&out.join("policy.csv"), &outcome.best.to_policy())?;
            let ts: Vec<usize> = outcome.best.thresholds().iter().map(|t| t + 1).collect();
            println!("best thresholds: {ts:?} value {}", outcome.best_value);
            if let Some((pol, penalized)) = &outcome.unconstrained_baseline {
                println!(
                    "unconstrained baseline (return - {lambda} * penalty): {penalized} at policy {:?}",
                    one_based(pol)
                );
            }
        }
        other => {
            return Err(input_error(anyhow::anyhow!(
                "unknown algorithm \"{other}\" (qlearn | threshold)"
            )))
        }
    }
    Ok(())
}

fn one_based(p: &Policy) -> Vec<usize> {
    p.as_slice().iter().map(|a| a + 1).collect()
}

fn write_policy_csv(path: &Path, policy: &Policy) -> CliResult {
    let mut csv = String::from("x,mu\n");
    for (x, a) in policy.as_slice().iter().enumerate() {
        writeln!(csv, "{},{}", x + 1, a + 1).unwrap();
    }
    write_atomic(path, &csv)
}

pub fn oracle(input: &Path, guard: u128, out: Option<&Path>) -> CliResult {
    let model = load(input)?;
    let mdp = model.mdp()?;
    if mdp.discount.is_none() {
        return Err(input_error(anyhow::anyhow!(
            "the brute-force oracle enumerates stationary policies on the \
             discounted criterion; the input carries no discount"
        )));
    }
    let outcome = brute_force_optimal(&mdp, guard).map_err(from_mdp_error)?;
    let mut text = String::new();
    writeln!(text, "policies enumerated: {}", outcome.num_policies).unwrap();
    writeln!(
        text,
        "optimum class size: {}",
        outcome.optimal_policies.len()
    )
    .unwrap();
    let has_monotone = outcome.optimal_policies.iter().any(is_monotone);
    writeln!(
        text,
        "optimum class contains a monotone policy: {has_monotone}"
    )
    .unwrap();
    writeln!(text, "optimal value: {:?}", outcome.optimum).unwrap();
    for p in outcome.optimal_policies.iter().take(20) {
        writeln!(text, "optimal policy: {:?}", one_based(p)).unwrap();
    }
    // is the value-iteration policy inside the optimum class?
    let fp = value_iteration(&mdp, 1e-8, 1_000_000).map_err(from_mdp_error)?;
    let j = policy_evaluation(&mdp, &fp.policy).map_err(from_mdp_error)?;
    let inside = j
        .iter()
        .zip(&outcome.optimum)
        .all(|(a, b)| (a - b).abs() <= outcome.tolerance);
    writeln!(text, "value-iteration policy in optimum class: {inside}").unwrap();
    print!("{text}");
    if let Some(path) = out {
        write_atomic(path, &text)?;
    }
    Ok(())
}
