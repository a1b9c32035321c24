use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::pomdp::{enumerate_actions, AccessTarget, Belief, CompositeAction, ComputeNode};

pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Pomdp,
    LocalOnly,
    CoordinatorOnly,
    MecAlways,
    RandomSense,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Pomdp,
        PolicyKind::LocalOnly,
        PolicyKind::CoordinatorOnly,
        PolicyKind::MecAlways,
        PolicyKind::RandomSense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Pomdp => "pomdp",
            PolicyKind::LocalOnly => "local_only",
            PolicyKind::CoordinatorOnly => "coordinator_only",
            PolicyKind::MecAlways => "mec_always",
            PolicyKind::RandomSense => "random_sense",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::config("policies", format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    /// One table over the full belief cube.
    Joint,
    /// One table per RB over that RB's own belief axis; the RB with the lowest
    /// cost-to-go is chosen at decision time.
    PerRb,
}

/// Decision table produced by value iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTable {
    pub mode: TableMode,
    pub horizon: usize,
    pub rb_count: usize,
    pub points_per_axis: usize,
    pub actions: Vec<CompositeAction>,
    /// `decisions[k]`: action index per grid point. In per-RB mode entry
    /// `r * points_per_axis + i` belongs to RB `r`.
    pub decisions: Vec<Vec<u16>>,
    /// Per-RB mode only: cost-to-go laid out like `decisions`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Vec<f64>>,
}

impl DecisionTable {
    fn axis(&self) -> Grid {
        Grid {
            dims: 1,
            points_per_axis: self.points_per_axis,
        }
    }

    fn decide(&self, slot: usize, belief: &Belief, ordinal: usize) -> Result<CompositeAction> {
        if slot >= self.horizon {
            return Err(Error::config(
                "horizon",
                format!("slot {slot} is beyond the policy horizon {}", self.horizon),
            ));
        }
        if belief.len() != self.rb_count {
            return Err(Error::config("belief", "belief length does not match the policy"));
        }
        let layer = &self.decisions[slot];
        let idx = match self.mode {
            TableMode::Joint => {
                let grid = Grid {
                    dims: self.rb_count,
                    points_per_axis: self.points_per_axis,
                };
                layer[grid.nearest(belief.as_slice())]
            }
            TableMode::PerRb => {
                if self.rb_count == 0 {
                    return Ok(CompositeAction::SLEEP);
                }
                let n = self.points_per_axis;
                let axis = self.axis();
                let values = &self.values[slot];
                // equal cost-to-go: rotate the preference by the device ordinal
                let mut best = None;
                let mut best_v = f64::INFINITY;
                for step in 0..self.rb_count {
                    let r = (ordinal + step) % self.rb_count;
                    let v = axis.interpolate(&values[r * n..(r + 1) * n], &[belief.idle(r)]);
                    if best.is_none() || v < best_v {
                        best = Some(r);
                        best_v = v;
                    }
                }
                let r = best.unwrap_or(0);
                layer[r * n + axis.nearest(&[belief.idle(r)])]
            }
        };
        Ok(self.actions[idx as usize])
    }
}

/// Decision rule of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyRule {
    Pomdp(DecisionTable),
    LocalOnly,
    /// Round-robin over the coordinator RBs, offloading to the coordinator.
    CoordinatorOnly {
        rb_enb: usize,
        rb_coord: usize,
    },
    /// Round-robin over the eNodeB RBs, offloading to the MEC server.
    MecAlways {
        rb_enb: usize,
    },
    RandomSense {
        rb_count: usize,
        seed: u64,
    },
}

/// A serializable mapping from (slot, belief) to a composite action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub format_version: u32,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub rule: PolicyRule,
}

impl Policy {
    pub fn new(rule: PolicyRule) -> Self {
        Policy {
            format_version: POLICY_FORMAT_VERSION,
            metadata: BTreeMap::new(),
            rule,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self.rule {
            PolicyRule::Pomdp(_) => PolicyKind::Pomdp,
            PolicyRule::LocalOnly => PolicyKind::LocalOnly,
            PolicyRule::CoordinatorOnly { .. } => PolicyKind::CoordinatorOnly,
            PolicyRule::MecAlways { .. } => PolicyKind::MecAlways,
            PolicyRule::RandomSense { .. } => PolicyKind::RandomSense,
        }
    }

    /// Number of slots the policy covers, `None` for stateless baselines.
    pub fn horizon(&self) -> Option<usize> {
        match &self.rule {
            PolicyRule::Pomdp(t) => Some(t.horizon),
            _ => None,
        }
    }

    /// Seed of the random baseline.
    pub fn seed(&self) -> Option<u64> {
        match self.rule {
            PolicyRule::RandomSense { seed, .. } => Some(seed),
            _ => None,
        }
    }

    /// Action for `slot` given the device's belief. `ordinal` is the device's
    /// position among the active devices and staggers round-robin choices;
    /// `rng` is only drawn from by the random baseline.
    pub fn decide<R: Rng + ?Sized>(
        &self,
        slot: usize,
        belief: &Belief,
        ordinal: usize,
        rng: &mut R,
    ) -> Result<CompositeAction> {
        match &self.rule {
            PolicyRule::Pomdp(table) => table.decide(slot, belief, ordinal),
            PolicyRule::LocalOnly => Ok(CompositeAction::SLEEP),
            &PolicyRule::CoordinatorOnly { rb_enb, rb_coord } => {
                if rb_coord == 0 {
                    return Ok(CompositeAction::SLEEP);
                }
                let r = rb_enb + (slot + ordinal) % rb_coord;
                Ok(CompositeAction::new(
                    Some(r),
                    Some(AccessTarget::Coordinator),
                    ComputeNode::Coordinator,
                ))
            }
            &PolicyRule::MecAlways { rb_enb } => {
                if rb_enb == 0 {
                    return Ok(CompositeAction::SLEEP);
                }
                let r = (slot + ordinal) % rb_enb;
                Ok(CompositeAction::new(Some(r), Some(AccessTarget::Enb), ComputeNode::Mec))
            }
            &PolicyRule::RandomSense { rb_count, .. } => {
                let actions = enumerate_actions(rb_count);
                Ok(actions[rng.random_range(0..actions.len())])
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let policy: Policy = serde_json::from_str(text)?;
        if policy.format_version != POLICY_FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported policy format {}", policy.format_version),
            ));
        }
        Ok(policy)
    }
}

/// Fixed comparison policy for a slice with the given RB split.
pub fn baseline_policy(kind: PolicyKind, rb_enb: usize, rb_coord: usize, rng_seed: u64) -> Result<Policy> {
    let rule = match kind {
        PolicyKind::LocalOnly => PolicyRule::LocalOnly,
        PolicyKind::CoordinatorOnly => PolicyRule::CoordinatorOnly { rb_enb, rb_coord },
        PolicyKind::MecAlways => PolicyRule::MecAlways { rb_enb },
        PolicyKind::RandomSense => PolicyRule::RandomSense {
            rb_count: rb_enb + rb_coord,
            seed: rng_seed,
        },
        PolicyKind::Pomdp => {
            return Err(Error::config(
                "policies",
                "the pomdp policy is produced by the solver, not a baseline",
            ))
        }
    };
    Ok(Policy::new(rule))
}

/// Policies of every active device, serialized together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub format_version: u32,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    /// `(device id, policy)` pairs in ordinal order.
    pub policies: Vec<(usize, Policy)>,
}

impl PolicySet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: PolicySet = serde_json::from_str(text)?;
        if set.format_version != POLICY_FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported policy format {}", set.format_version),
            ));
        }
        Ok(set)
    }
}
