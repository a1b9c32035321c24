use serde::{Deserialize, Serialize};

use crate::cost::{CostParams, SlotCosts};
use crate::error::{Error, Result};
use crate::pomdp::{enumerate_actions, predict, AccessTarget, CompositeAction, RbProcess, RbState};

/// Idle and busy rates of both access links on every access RB, in bits/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRates {
    /// `enb[r] = [idle, busy]` towards the eNodeB.
    pub enb: Vec<[f64; 2]>,
    /// `coord[r] = [idle, busy]` towards the coordinator.
    pub coord: Vec<[f64; 2]>,
}

impl LinkRates {
    pub fn rate(&self, target: AccessTarget, rb: usize, state: RbState) -> f64 {
        match target {
            AccessTarget::Enb => self.enb[rb][state.index()],
            AccessTarget::Coordinator => self.coord[rb][state.index()],
        }
    }
}

/// Single-device decision model: RB chains, the consistent actions and the
/// slot cost of each action given the state of the RB it senses.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub processes: Vec<RbProcess>,
    pub actions: Vec<CompositeAction>,
    /// `costs[a] = [cost when the sensed RB is idle, cost when busy]`;
    /// infinite for infeasible slots.
    pub costs: Vec<[f64; 2]>,
}

/// Slot costs of `action` when the accessed RB is in `state`.
pub fn action_costs(
    params: &CostParams,
    rates: &LinkRates,
    action: &CompositeAction,
    state: RbState,
) -> Result<SlotCosts> {
    let link_rate = match (action.sense, action.access) {
        (Some(r), Some(target)) => rates.rate(target, r, state),
        _ => 0.0,
    };
    params.slot_costs(action.access_mode(), action.placement(), link_rate)
}

impl PomdpModel {
    pub fn new(processes: Vec<RbProcess>, params: &CostParams, rates: &LinkRates) -> Result<Self> {
        let rb_count = processes.len();
        if rates.enb.len() != rb_count || rates.coord.len() != rb_count {
            return Err(Error::config("rates", "link rates must cover every access RB"));
        }
        for p in &processes {
            p.validate()?;
        }
        params.weights.validate()?;
        let actions = enumerate_actions(rb_count);
        let mut costs = Vec::with_capacity(actions.len());
        for a in &actions {
            let mut row = [0.0; 2];
            for s in [RbState::Idle, RbState::Busy] {
                row[s.index()] = match action_costs(params, rates, a, s) {
                    Ok(c) => c.scalar_cost,
                    Err(Error::Infeasible(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
            }
            costs.push(row);
        }
        Ok(PomdpModel {
            processes,
            actions,
            costs,
        })
    }

    /// Model built from an explicit cost table, for tests and tiny instances.
    pub fn from_costs(processes: Vec<RbProcess>, costs: Vec<[f64; 2]>) -> Result<Self> {
        let actions = enumerate_actions(processes.len());
        if costs.len() != actions.len() {
            return Err(Error::config(
                "costs",
                format!("expected {} rows, got {}", actions.len(), costs.len()),
            ));
        }
        if costs.iter().flatten().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::config("costs", "costs must be nonnegative"));
        }
        Ok(PomdpModel {
            processes,
            actions,
            costs,
        })
    }

    pub fn rb_count(&self) -> usize {
        self.processes.len()
    }

    /// Expected cost of action `a` given the idle belief `prior` held at the
    /// start of the slot.
    pub fn expected_cost(&self, a: usize, prior: &[f64]) -> f64 {
        let row = self.costs[a];
        match self.actions[a].sense {
            None => row[0],
            Some(r) => {
                let q = predict(prior[r], &self.processes[r]);
                mix(q, row[0], row[1])
            }
        }
    }

    /// Restriction to RB `r` alone, with its actions mapped to RB 0. Returns
    /// the sub-model and the global index of each of its actions.
    pub fn single_rb(&self, r: usize) -> (PomdpModel, Vec<usize>) {
        let sub_actions = enumerate_actions(1);
        let mut index = vec![0];
        index.extend((0..sub_actions.len() - 1).map(|i| 1 + 5 * r + i));
        let costs = index.iter().map(|&g| self.costs[g]).collect();
        (
            PomdpModel {
                processes: vec![self.processes[r]],
                actions: sub_actions,
                costs,
            },
            index,
        )
    }
}

/// `q * idle + (1 - q) * busy`, ignoring a branch of zero probability so that
/// an infeasible but impossible outcome does not poison the expectation.
pub(crate) fn mix(q: f64, idle: f64, busy: f64) -> f64 {
    let a = if q > 0.0 { q * idle } else { 0.0 };
    let b = if q < 1.0 { (1.0 - q) * busy } else { 0.0 };
    a + b
}
