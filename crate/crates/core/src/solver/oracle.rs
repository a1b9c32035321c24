use super::model::PomdpModel;
use crate::error::{Error, Result};
use crate::pomdp::{belief_update, observation_likelihood, predict, Belief, CompositeAction, Observation, RbState};

pub const ORACLE_MAX_HORIZON: usize = 5;
pub const ORACLE_MAX_RBS: usize = 2;

/// Optimal decision at one node of the action/observation tree.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub action: CompositeAction,
    /// Subtrees keyed by what was observed; `None` after a sleep slot.
    pub children: Vec<(Option<RbState>, OracleNode)>,
}

impl OracleNode {
    pub fn child(&self, obs: Option<RbState>) -> Option<&OracleNode> {
        self.children.iter().find(|(o, _)| *o == obs).map(|(_, n)| n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Exact minimum expected cost over the horizon.
    pub value: f64,
    pub root: Option<OracleNode>,
}

/// Exact optimum from `initial` by enumerating every action and observation
/// branch, with exact Bayes updates and no discretization.
pub fn brute_force_oracle(model: &PomdpModel, horizon: usize, initial: &Belief) -> Result<OracleSolution> {
    if horizon > ORACLE_MAX_HORIZON || model.rb_count() > ORACLE_MAX_RBS {
        return Err(Error::TooLarge(format!(
            "horizon {horizon} with {} RBs (limits: horizon {ORACLE_MAX_HORIZON}, {ORACLE_MAX_RBS} RBs)",
            model.rb_count()
        )));
    }
    if initial.len() != model.rb_count() {
        return Err(Error::config("belief", "initial belief does not match the model"));
    }
    let (value, root) = search(model, initial, horizon)?;
    Ok(OracleSolution { value, root })
}

type Branches = Vec<(Option<RbState>, OracleNode)>;

fn search(model: &PomdpModel, belief: &Belief, steps: usize) -> Result<(f64, Option<OracleNode>)> {
    if steps == 0 {
        return Ok((0.0, None));
    }
    let prior = belief.as_slice();
    // continuation after sleeping, and after sensing each RB
    let sleep = {
        let next = belief_update(belief, &CompositeAction::SLEEP, None, &model.processes)?;
        let (v, node) = search(model, &next, steps - 1)?;
        (v, node.map(|n| vec![(None, n)]).unwrap_or_default())
    };
    let mut sensed: Vec<(f64, Branches)> = Vec::with_capacity(model.rb_count());
    for r in 0..model.rb_count() {
        let probe = CompositeAction::new(Some(r), None, crate::pomdp::ComputeNode::Local);
        let q = predict(prior[r], &model.processes[r]);
        let mut value = 0.0;
        let mut branches = Vec::new();
        for obs in [RbState::Idle, RbState::Busy] {
            let like = observation_likelihood(q, &model.processes[r], obs);
            if like <= 0.0 {
                continue;
            }
            let next = belief_update(
                belief,
                &probe,
                Some(Observation { rb: r, state: obs }),
                &model.processes,
            )?;
            let (v, node) = search(model, &next, steps - 1)?;
            value += like * v;
            if let Some(n) = node {
                branches.push((Some(obs), n));
            }
        }
        sensed.push((value, branches));
    }

    let mut best: Option<(f64, usize)> = None;
    for (a, action) in model.actions.iter().enumerate() {
        let future = match action.sense {
            None => sleep.0,
            Some(r) => sensed[r].0,
        };
        let q = model.expected_cost(a, prior) + future;
        if best.is_none_or(|(v, _)| q < v) {
            best = Some((q, a));
        }
    }
    let (value, a) = best.expect("action set always contains sleep");
    let action = model.actions[a];
    let children = match action.sense {
        None => sleep.1,
        Some(r) => std::mem::take(&mut sensed[r].1),
    };
    Ok((value, Some(OracleNode { action, children })))
}
