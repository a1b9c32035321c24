//! Partially observed RB occupancy: composite actions, per-RB Markov chains,
//! noisy sensing and Bayes filtering of the per-RB idle probability.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{AccessMode, Placement};
use crate::error::{Error, Result};
pub use crate::model::RbState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessTarget {
    Enb,
    Coordinator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeNode {
    Local,
    Mec,
    Coordinator,
}

impl From<ComputeNode> for Placement {
    fn from(c: ComputeNode) -> Self {
        match c {
            ComputeNode::Local => Placement::LocalDevice,
            ComputeNode::Mec => Placement::MecServer,
            ComputeNode::Coordinator => Placement::Coordinator,
        }
    }
}

/// Sensing, access and computing decision of one device for one slot.
///
/// `sense` is a zero-based RB index; `None` means the device sleeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeAction {
    pub sense: Option<usize>,
    pub access: Option<AccessTarget>,
    pub compute: ComputeNode,
}

impl CompositeAction {
    pub const SLEEP: CompositeAction = CompositeAction {
        sense: None,
        access: None,
        compute: ComputeNode::Local,
    };

    pub fn new(sense: Option<usize>, access: Option<AccessTarget>, compute: ComputeNode) -> Self {
        CompositeAction { sense, access, compute }
    }

    /// Access requires a sensed RB, and offloading must go over the link that
    /// reaches the chosen compute node.
    pub fn is_consistent(&self) -> bool {
        if self.access.is_some() && self.sense.is_none() {
            return false;
        }
        match self.compute {
            ComputeNode::Local => true,
            ComputeNode::Mec => self.access == Some(AccessTarget::Enb),
            ComputeNode::Coordinator => self.access == Some(AccessTarget::Coordinator),
        }
    }

    pub fn access_mode(&self) -> AccessMode {
        match (self.sense, self.access) {
            (None, _) => AccessMode::None,
            (Some(_), None) => AccessMode::SenseOnly,
            (Some(_), Some(_)) => AccessMode::SenseAndTransmit,
        }
    }

    pub fn placement(&self) -> Placement {
        self.compute.into()
    }
}

impl fmt::Display for CompositeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Some(r) => format!("rb{r}"),
            None => "none".into(),
        };
        let access = match self.access {
            None => "none",
            Some(AccessTarget::Enb) => "enb",
            Some(AccessTarget::Coordinator) => "coordinator",
        };
        let compute = match self.compute {
            ComputeNode::Local => "local",
            ComputeNode::Mec => "mec",
            ComputeNode::Coordinator => "coordinator",
        };
        write!(f, "{sense}/{access}/{compute}")
    }
}

/// How the sensing error probabilities are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingModel {
    /// A sensed RB is reported correctly with probability `1 - ν`.
    #[default]
    Symmetric,
    /// `ν` is the probability of reporting idle regardless of the true state,
    /// which makes sensing uninformative.
    Literal,
}

/// Two-state occupancy chain of one RB and its sensing error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbProcess {
    pub p_stay_idle: f64,
    pub p_idle_to_busy: f64,
    pub p_busy_to_idle: f64,
    pub p_stay_busy: f64,
    /// False-observation probability on the sensed RB.
    pub false_obs_sensed: f64,
    /// Probability of an idle report on an RB that was not sensed.
    pub false_obs_unsensed: f64,
    #[serde(default)]
    pub sensing: SensingModel,
}

impl Default for RbProcess {
    /// Idle stays idle w.p. 0.8, busy turns idle w.p. 0.85, 10% false reports.
    fn default() -> Self {
        RbProcess::new(0.8, 0.85, 0.1, 0.1)
    }
}

impl RbProcess {
    pub fn new(p_stay_idle: f64, p_busy_to_idle: f64, nu: f64, omega: f64) -> Self {
        RbProcess {
            p_stay_idle,
            p_idle_to_busy: 1.0 - p_stay_idle,
            p_busy_to_idle,
            p_stay_busy: 1.0 - p_busy_to_idle,
            false_obs_sensed: nu,
            false_obs_unsensed: omega,
            sensing: SensingModel::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, p) in [
            ("p_stay_idle", self.p_stay_idle),
            ("p_idle_to_busy", self.p_idle_to_busy),
            ("p_busy_to_idle", self.p_busy_to_idle),
            ("p_stay_busy", self.p_stay_busy),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(key, format!("probability out of range: {p}")));
            }
        }
        if (self.p_stay_idle + self.p_idle_to_busy - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "p_idle_to_busy",
                "idle row of the transition matrix must sum to 1",
            ));
        }
        if (self.p_busy_to_idle + self.p_stay_busy - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "p_stay_busy",
                "busy row of the transition matrix must sum to 1",
            ));
        }
        for (key, p) in [
            ("false_obs_sensed", self.false_obs_sensed),
            ("false_obs_unsensed", self.false_obs_unsensed),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::config(key, format!("must lie in [0, 1), got {p}")));
            }
        }
        Ok(())
    }

    /// `Pr{next = to | current = from}`.
    pub fn transition(&self, from: RbState, to: RbState) -> f64 {
        match (from, to) {
            (RbState::Idle, RbState::Idle) => self.p_stay_idle,
            (RbState::Idle, RbState::Busy) => self.p_idle_to_busy,
            (RbState::Busy, RbState::Idle) => self.p_busy_to_idle,
            (RbState::Busy, RbState::Busy) => self.p_stay_busy,
        }
    }

    /// Long-run probability of the idle state.
    pub fn stationary_idle(&self) -> f64 {
        let denom = self.p_busy_to_idle + self.p_idle_to_busy;
        if denom == 0.0 {
            // reducible chain: every belief is stationary
            return 1.0;
        }
        self.p_busy_to_idle / denom
    }
}

/// Per-RB probability that the RB is idle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief(pub Vec<f64>);

impl Belief {
    pub fn uniform(rb_count: usize, idle: f64) -> Self {
        Belief(vec![idle; rb_count])
    }

    pub fn stationary(procs: &[RbProcess]) -> Self {
        Belief(procs.iter().map(RbProcess::stationary_idle).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn idle(&self, rb: usize) -> f64 {
        self.0[rb]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// What the device saw on the RB it sensed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub rb: usize,
    pub state: RbState,
}

/// One step of the occupancy chain applied to an idle probability.
pub fn predict(belief_idle: f64, proc: &RbProcess) -> f64 {
    belief_idle * proc.p_stay_idle + (1.0 - belief_idle) * proc.p_busy_to_idle
}

/// `Pr{obs | true_state}` for a sensed or unsensed RB.
pub fn observation_prob(proc: &RbProcess, sensed: bool, true_state: RbState, obs: RbState) -> f64 {
    if !sensed {
        return match obs {
            RbState::Idle => proc.false_obs_unsensed,
            RbState::Busy => 1.0 - proc.false_obs_unsensed,
        };
    }
    let nu = proc.false_obs_sensed;
    match proc.sensing {
        SensingModel::Symmetric => {
            if obs == true_state {
                1.0 - nu
            } else {
                nu
            }
        }
        SensingModel::Literal => match obs {
            RbState::Idle => nu,
            RbState::Busy => 1.0 - nu,
        },
    }
}

/// Probability of reporting `obs` on a sensed RB whose predicted idle
/// probability is `predicted_idle`.
pub fn observation_likelihood(predicted_idle: f64, proc: &RbProcess, obs: RbState) -> f64 {
    predicted_idle * observation_prob(proc, true, RbState::Idle, obs)
        + (1.0 - predicted_idle) * observation_prob(proc, true, RbState::Busy, obs)
}

/// Posterior idle probability of a sensed RB after seeing `obs`.
pub fn posterior_idle(prior_idle: f64, proc: &RbProcess, obs: RbState) -> Option<f64> {
    let q = predict(prior_idle, proc);
    let num = q * observation_prob(proc, true, RbState::Idle, obs);
    let den = num + (1.0 - q) * observation_prob(proc, true, RbState::Busy, obs);
    if den > 0.0 {
        Some((num / den).clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Bayes update of the whole belief vector at the end of a slot.
///
/// The sensed RB is conditioned on `obs`; every other RB only moves one step
/// along its chain, because its observation term does not depend on the state.
pub fn belief_update(
    belief: &Belief,
    action: &CompositeAction,
    obs: Option<Observation>,
    procs: &[RbProcess],
) -> Result<Belief> {
    if belief.len() != procs.len() {
        return Err(Error::config(
            "belief",
            format!("{} entries for {} RBs", belief.len(), procs.len()),
        ));
    }
    let sensed = match (action.sense, obs) {
        (Some(r), Some(o)) if o.rb == r => Some(o),
        (None, None) => None,
        _ => return Err(Error::config("observation", "observation does not match the sensed RB")),
    };
    let mut next = Vec::with_capacity(belief.len());
    for (r, (&pi, proc)) in belief.0.iter().zip(procs).enumerate() {
        match sensed {
            Some(o) if o.rb == r => {
                next.push(posterior_idle(pi, proc, o.state).ok_or(Error::DegenerateUpdate { rb: r })?);
            }
            _ => next.push(predict(pi, proc)),
        }
    }
    Ok(Belief(next))
}

/// Every consistent composite action for a slice with `rb_count` access RBs.
///
/// Order: sleep first, then per RB: sense only, eNodeB+local, eNodeB+MEC,
/// coordinator+local, coordinator+coordinator. Solver tie-breaking follows it.
pub fn enumerate_actions(rb_count: usize) -> Vec<CompositeAction> {
    let mut out = Vec::with_capacity(1 + 5 * rb_count);
    out.push(CompositeAction::SLEEP);
    for r in 0..rb_count {
        let s = Some(r);
        out.push(CompositeAction::new(s, None, ComputeNode::Local));
        out.push(CompositeAction::new(s, Some(AccessTarget::Enb), ComputeNode::Local));
        out.push(CompositeAction::new(s, Some(AccessTarget::Enb), ComputeNode::Mec));
        out.push(CompositeAction::new(
            s,
            Some(AccessTarget::Coordinator),
            ComputeNode::Local,
        ));
        out.push(CompositeAction::new(
            s,
            Some(AccessTarget::Coordinator),
            ComputeNode::Coordinator,
        ));
    }
    out
}
