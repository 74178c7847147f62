//! JSON wire format for models: a tagged document that round-trips finite
//! MDPs and allocation models with semantic validation and field-path error
//! messages.

use crate::allocation::AllocationModel;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::mdp::{FiniteMdp, Objective, ROW_SUM_TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelDocument {
    #[serde(rename = "mdp")]
    Mdp(MdpDocument),
    #[serde(rename = "allocation")]
    Allocation(AllocationDocument),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    /// "max" or "min".
    pub objective: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Vec<f64>>,
    /// X rows of A numbers.
    pub rewards: Vec<Vec<f64>>,
    /// A matrices, each X rows of X numbers.
    pub transitions: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocationDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub epsilon: f64,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    /// X rows of A numbers (unscaled effort costs).
    pub costs: Vec<Vec<f64>>,
    pub theta1: f64,
    pub horizon: usize,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents are serializable")
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            ModelDocument::Mdp(d) => d.horizon,
            ModelDocument::Allocation(d) => Some(d.horizon),
        }
    }
}

impl MdpDocument {
    /// Schema validation with field paths, then construction (which re-checks
    /// the numeric invariants).
    pub fn to_mdp(&self) -> Result<FiniteMdp> {
        let x_n = self.num_states;
        let a_n = self.num_actions;
        if x_n == 0 || a_n == 0 {
            return Err(Error::InvalidModel(
                "num_states and num_actions must be positive".into(),
            ));
        }
        let objective = match self.objective.as_str() {
            "max" => Objective::Maximize,
            "min" => Objective::Minimize,
            other => {
                return Err(Error::InvalidModel(format!(
                    "objective: expected \"max\" or \"min\", got \"{other}\""
                )))
            }
        };
        if self.rewards.len() != x_n {
            return Err(Error::InvalidModel(format!(
                "rewards: expected {x_n} rows, got {}",
                self.rewards.len()
            )));
        }
        for (i, row) in self.rewards.iter().enumerate() {
            if row.len() != a_n {
                return Err(Error::InvalidModel(format!(
                    "rewards[{i}]: expected {a_n} entries, got {}",
                    row.len()
                )));
            }
        }
        if self.transitions.len() != a_n {
            return Err(Error::InvalidModel(format!(
                "transitions: expected {a_n} matrices, got {}",
                self.transitions.len()
            )));
        }
        for (a, m) in self.transitions.iter().enumerate() {
            if m.len() != x_n {
                return Err(Error::InvalidModel(format!(
                    "transitions[{a}]: expected {x_n} rows, got {}",
                    m.len()
                )));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != x_n {
                    return Err(Error::InvalidModel(format!(
                        "transitions[{a}][{i}]: expected {x_n} entries, got {}",
                        row.len()
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "transitions[{a}][{i}]: row sums to {sum}, not 1"
                    )));
                }
            }
        }
        if let Some(t) = &self.terminal {
            if t.len() != x_n {
                return Err(Error::InvalidModel(format!(
                    "terminal: expected {x_n} entries, got {}",
                    t.len()
                )));
            }
        }
        let transitions = self.transitions.iter().map(|m| Mat::from_rows(m)).collect();
        FiniteMdp::new(
            transitions,
            Mat::from_rows(&self.rewards),
            self.discount,
            self.terminal.clone(),
            objective,
        )
    }

    pub fn from_mdp(mdp: &FiniteMdp, horizon: Option<usize>) -> Self {
        Self {
            num_states: mdp.num_states,
            num_actions: mdp.num_actions,
            objective: match mdp.objective {
                Objective::Maximize => "max".into(),
                Objective::Minimize => "min".into(),
            },
            discount: mdp.discount,
            horizon,
            terminal: mdp.terminal.clone(),
            rewards: mdp.rewards.to_nested(),
            transitions: mdp.transitions.iter().map(|m| m.to_nested()).collect(),
        }
    }
}

impl AllocationDocument {
    pub fn to_model(&self) -> Result<AllocationModel> {
        if self.costs.len() != self.num_states {
            return Err(Error::InvalidModel(format!(
                "costs: expected {} rows, got {}",
                self.num_states,
                self.costs.len()
            )));
        }
        for (i, row) in self.costs.iter().enumerate() {
            if row.len() != self.num_actions {
                return Err(Error::InvalidModel(format!(
                    "costs[{i}]: expected {} entries, got {}",
                    self.num_actions,
                    row.len()
                )));
            }
        }
        if self.gamma.len() + 1 != self.num_actions {
            return Err(Error::InvalidModel(format!(
                "gamma: expected {} entries, got {}",
                self.num_actions - 1,
                self.gamma.len()
            )));
        }
        if self.kappa.len() != self.num_states {
            return Err(Error::InvalidModel(format!(
                "kappa: expected {} entries, got {}",
                self.num_states,
                self.kappa.len()
            )));
        }
        AllocationModel::new(
            self.epsilon,
            self.gamma.clone(),
            Mat::from_rows(&self.costs),
            self.kappa.clone(),
            self.theta1,
            self.horizon,
        )
    }

    pub fn from_model(model: &AllocationModel) -> Self {
        Self {
            num_states: model.num_states,
            num_actions: model.num_actions,
            epsilon: model.epsilon,
            gamma: model.gamma.clone(),
            kappa: model.terminal_penalty.clone(),
            costs: model.effort_costs.to_nested(),
            theta1: model.base_success,
            horizon: model.horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{build_ross_case, RossCase};

    #[test]
    fn mdp_document_roundtrip() {
        let mdp = crate::generators::build_toy();
        let doc = ModelDocument::Mdp(MdpDocument::from_mdp(&mdp, Some(100)));
        let text = doc.to_json();
        let back = ModelDocument::from_json(&text).unwrap();
        match back {
            ModelDocument::Mdp(d) => {
                let rebuilt = d.to_mdp().unwrap();
                assert_eq!(rebuilt.rewards, mdp.rewards);
                assert_eq!(rebuilt.transitions, mdp.transitions);
                assert_eq!(rebuilt.discount, mdp.discount);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn allocation_document_roundtrip() {
        let model = build_ross_case(RossCase::II);
        let doc = ModelDocument::Allocation(AllocationDocument::from_model(&model));
        let back = ModelDocument::from_json(&doc.to_json()).unwrap();
        match back {
            ModelDocument::Allocation(d) => {
                let rebuilt = d.to_model().unwrap();
                assert_eq!(rebuilt.effort_costs, model.effort_costs);
                assert_eq!(rebuilt.terminal_penalty, model.terminal_penalty);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn bad_row_sum_reports_field_path() {
        let mdp = crate::generators::build_toy();
        let mut doc = MdpDocument::from_mdp(&mdp, None);
        doc.transitions[1][2][0] += 0.05;
        let err = doc.to_mdp().unwrap_err();
        assert!(err.to_string().contains("transitions[1][2]"), "{err}");
    }

    #[test]
    fn bad_objective_rejected() {
        let mdp = crate::generators::build_toy();
        let mut doc = MdpDocument::from_mdp(&mdp, None);
        doc.objective = "maximize".into();
        assert!(doc.to_mdp().is_err());
    }
}
