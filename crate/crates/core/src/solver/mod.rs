//! Finite-horizon policy computation over the belief space.
//!
//! [`value_iteration`] runs backward induction on a belief grid with
//! multilinear interpolation; [`brute_force_oracle`] solves tiny instances
//! exactly by enumerating every action/observation branch.

mod grid;
mod model;
mod oracle;
mod policy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::Grid;
pub use model::{action_costs, LinkRates, PomdpModel};
pub use oracle::{brute_force_oracle, OracleNode, OracleSolution, ORACLE_MAX_HORIZON, ORACLE_MAX_RBS};
pub use policy::{
    baseline_policy, DecisionTable, Policy, PolicyKind, PolicyRule, PolicySet, TableMode, POLICY_FORMAT_VERSION,
};

use crate::error::{Error, Result};
use crate::pomdp::{observation_likelihood, posterior_idle, predict, RbState};

/// Largest joint grid (points times slots) the solver accepts.
const JOINT_WORK_LIMIT: usize = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Joint grid for at most two RBs, per-RB axes otherwise.
    #[default]
    Auto,
    Joint,
    PerRb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub horizon: usize,
    pub grid_step: f64,
    #[serde(default)]
    pub mode: SolverMode,
}

/// Cost-to-go layers and argmin decisions over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub grid: Grid,
    /// `layers[k]` holds `W_k` at every grid point; `layers[horizon]` is zero.
    pub layers: Vec<Vec<f64>>,
    /// Argmin action index (into the model the table was solved for).
    pub decisions: Vec<Vec<u16>>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }

    pub fn value(&self, k: usize, belief: &[f64]) -> f64 {
        self.grid.interpolate(&self.layers[k], belief)
    }
}

/// Minimum expected remaining cost as a function of slot and belief.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunction {
    Joint(ValueTable),
    /// One single-RB table per RB; the value is the best of them.
    PerRb(Vec<ValueTable>),
}

impl ValueFunction {
    pub fn horizon(&self) -> usize {
        match self {
            ValueFunction::Joint(t) => t.horizon(),
            ValueFunction::PerRb(ts) => ts.first().map_or(0, ValueTable::horizon),
        }
    }

    pub fn value(&self, k: usize, belief: &[f64]) -> f64 {
        match self {
            ValueFunction::Joint(t) => t.value(k, belief),
            ValueFunction::PerRb(ts) => ts
                .iter()
                .enumerate()
                .map(|(r, t)| t.value(k, &belief[r..=r]))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Backward induction over a grid of the full belief cube of `model`.
fn solve_joint(model: &PomdpModel, horizon: usize, grid: Grid) -> ValueTable {
    let rb_count = model.rb_count();
    let mut layers = vec![vec![0.0; grid.len()]; horizon + 1];
    let mut decisions = vec![Vec::new(); horizon];
    for k in (0..horizon).rev() {
        let next = &layers[k + 1];
        let (values, acts): (Vec<f64>, Vec<u16>) = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (Vec::with_capacity(rb_count), Vec::with_capacity(rb_count)),
                |(prior, scratch), flat| {
                    grid.point(flat, prior);
                    let predicted: Vec<f64> = prior
                        .iter()
                        .zip(&model.processes)
                        .map(|(&p, proc)| predict(p, proc))
                        .collect();
                    let sleep_future = grid.interpolate(next, &predicted);
                    // expected continuation after sensing RB r, shared by all actions on r
                    let sense_future: Vec<f64> = (0..rb_count)
                        .map(|r| {
                            let proc = &model.processes[r];
                            let mut acc = 0.0;
                            for obs in [RbState::Idle, RbState::Busy] {
                                let like = observation_likelihood(predicted[r], proc, obs);
                                if like <= 0.0 {
                                    continue;
                                }
                                let Some(post) = posterior_idle(prior[r], proc, obs) else {
                                    continue;
                                };
                                scratch.clear();
                                scratch.extend_from_slice(&predicted);
                                scratch[r] = post;
                                acc += like * grid.interpolate(next, scratch);
                            }
                            acc
                        })
                        .collect();
                    let mut best = (f64::INFINITY, 0u16);
                    for (a, action) in model.actions.iter().enumerate() {
                        let future = match action.sense {
                            None => sleep_future,
                            Some(r) => sense_future[r],
                        };
                        let q = model.expected_cost(a, prior) + future;
                        if q < best.0 {
                            best = (q, a as u16);
                        }
                    }
                    best
                },
            )
            .unzip();
        layers[k] = values;
        decisions[k] = acts;
    }
    ValueTable {
        grid,
        layers,
        decisions,
    }
}

/// Computes the finite-horizon policy and value function of `model`.
///
/// With a joint grid the result is exact up to interpolation. In per-RB
/// mode every RB is solved as if it were the only one available, and at
/// decision time the RB with the lowest cost-to-go is used.
pub fn value_iteration(model: &PomdpModel, config: &SolverConfig) -> Result<(Policy, ValueFunction)> {
    if config.horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    let rb_count = model.rb_count();
    let mode = match config.mode {
        SolverMode::Auto if rb_count <= 2 => SolverMode::Joint,
        SolverMode::Auto => SolverMode::PerRb,
        m => m,
    };
    let axis = Grid::new(1, config.grid_step)?;
    let points = axis.points_per_axis;
    match mode {
        SolverMode::Joint | SolverMode::Auto => {
            let grid = Grid::new(rb_count, config.grid_step)?;
            let work = (points as f64).powi(rb_count as i32) * config.horizon as f64;
            if work > JOINT_WORK_LIMIT as f64 {
                return Err(Error::config(
                    "grid_step",
                    format!("joint grid over {rb_count} RBs is too large; use per-RB mode or a coarser step"),
                ));
            }
            let table = solve_joint(model, config.horizon, grid);
            let policy = Policy::new(PolicyRule::Pomdp(DecisionTable {
                mode: TableMode::Joint,
                horizon: config.horizon,
                rb_count,
                points_per_axis: points,
                actions: model.actions.clone(),
                decisions: table.decisions.clone(),
                values: Vec::new(),
            }));
            Ok((policy, ValueFunction::Joint(table)))
        }
        SolverMode::PerRb => {
            let mut tables: Vec<ValueTable> = Vec::with_capacity(rb_count);
            let mut solved: Vec<(PomdpModel, usize)> = Vec::new();
            let mut decisions = vec![vec![0u16; rb_count * points]; config.horizon];
            let mut values = vec![vec![0f64; rb_count * points]; config.horizon];
            for r in 0..rb_count {
                let (sub, index) = model.single_rb(r);
                // identical RBs share one solution
                let table = match solved.iter().find(|(m, _)| *m == sub) {
                    Some(&(_, t)) => tables[t].clone(),
                    None => {
                        solved.push((sub.clone(), r));
                        solve_joint(&sub, config.horizon, axis)
                    }
                };
                for k in 0..config.horizon {
                    for i in 0..points {
                        decisions[k][r * points + i] = index[table.decisions[k][i] as usize] as u16;
                        values[k][r * points + i] = table.layers[k][i];
                    }
                }
                tables.push(table);
            }
            let policy = Policy::new(PolicyRule::Pomdp(DecisionTable {
                mode: TableMode::PerRb,
                horizon: config.horizon,
                rb_count,
                points_per_axis: points,
                actions: model.actions.clone(),
                decisions,
                values,
            }));
            Ok((policy, ValueFunction::PerRb(tables)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{Belief, RbProcess};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_rb_costs() -> Vec<[f64; 2]> {
        // sleep, sense, enb+local, enb+mec, coord+local, coord+coord
        vec![
            [1.0, 1.0],
            [1.01, 1.01],
            [1.2, 1.5],
            [0.1, 0.6],
            [1.2, 1.4],
            [0.55, 0.8],
        ]
    }

    fn cfg(horizon: usize, step: f64) -> SolverConfig {
        SolverConfig {
            horizon,
            grid_step: step,
            mode: SolverMode::Auto,
        }
    }

    #[test]
    fn free_sleep_wins_one_step() {
        let mut costs = single_rb_costs();
        costs[0] = [0.0, 0.0];
        let model = PomdpModel::from_costs(vec![RbProcess::default()], costs).unwrap();
        let (policy, vf) = value_iteration(&model, &cfg(1, 0.05)).unwrap();
        let PolicyRule::Pomdp(table) = &policy.rule else {
            panic!()
        };
        assert!(table.decisions[0].iter().all(|&a| a == 0));
        assert!(matches!(&vf, ValueFunction::Joint(t) if t.layers[0].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn one_step_is_greedy() {
        let model = PomdpModel::from_costs(vec![RbProcess::default()], single_rb_costs()).unwrap();
        let (_, vf) = value_iteration(&model, &cfg(1, 0.01)).unwrap();
        let ValueFunction::Joint(t) = &vf else { panic!() };
        let mut p = Vec::new();
        for flat in 0..t.grid.len() {
            t.grid.point(flat, &mut p);
            let greedy = (0..model.actions.len())
                .map(|a| model.expected_cost(a, &p))
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(t.layers[0][flat], greedy, max_relative = 1e-14);
        }
    }

    #[test]
    fn energy_scaling_scales_values() {
        let model = PomdpModel::from_costs(vec![RbProcess::default(); 2], {
            let mut c = vec![[1.0, 1.0]];
            for r in 0..2 {
                let bump = 0.01 * r as f64;
                c.extend([
                    [1.01, 1.01],
                    [1.2 + bump, 1.5],
                    [0.1, 0.6 + bump],
                    [1.2, 1.4],
                    [0.55, 0.8 - bump],
                ]);
            }
            c
        })
        .unwrap();
        let scaled = PomdpModel::from_costs(
            model.processes.clone(),
            model.costs.iter().map(|r| [r[0] * 4.0, r[1] * 4.0]).collect(),
        )
        .unwrap();
        let (p1, v1) = value_iteration(&model, &cfg(4, 0.05)).unwrap();
        let (p2, v2) = value_iteration(&scaled, &cfg(4, 0.05)).unwrap();
        assert_eq!(p1.rule, p2.rule);
        let (ValueFunction::Joint(a), ValueFunction::Joint(b)) = (&v1, &v2) else {
            panic!()
        };
        for (la, lb) in a.layers.iter().zip(&b.layers) {
            for (x, y) in la.iter().zip(lb) {
                assert_relative_eq!(*y, 4.0 * x, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn value_grows_with_horizon() {
        let model = PomdpModel::from_costs(vec![RbProcess::default()], single_rb_costs()).unwrap();
        let mut previous: Option<Vec<f64>> = None;
        for horizon in 1..6 {
            let (_, vf) = value_iteration(&model, &cfg(horizon, 0.01)).unwrap();
            let ValueFunction::Joint(t) = vf else { panic!() };
            if let Some(prev) = previous {
                assert!(t.layers[0].iter().zip(&prev).all(|(now, before)| now >= before));
            }
            previous = Some(t.layers[0].clone());
        }
    }

    #[test]
    fn per_rb_mode_matches_joint_on_one_rb() {
        let model = PomdpModel::from_costs(vec![RbProcess::default()], single_rb_costs()).unwrap();
        let joint = value_iteration(
            &model,
            &SolverConfig {
                mode: SolverMode::Joint,
                ..cfg(5, 0.01)
            },
        )
        .unwrap();
        let per = value_iteration(
            &model,
            &SolverConfig {
                mode: SolverMode::PerRb,
                ..cfg(5, 0.01)
            },
        )
        .unwrap();
        for x in [0.0, 0.25, 0.5, 0.9, 1.0] {
            assert_relative_eq!(joint.1.value(0, &[x]), per.1.value(0, &[x]), max_relative = 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..5 {
            let b = Belief(vec![0.3]);
            assert_eq!(
                joint.0.decide(k, &b, 0, &mut rng).unwrap(),
                per.0.decide(k, &b, 0, &mut rng).unwrap()
            );
        }
    }

    #[test]
    fn per_rb_mode_staggers_ties_by_ordinal() {
        let model = PomdpModel::from_costs(vec![RbProcess::default(); 3], {
            let mut c = vec![[1.0, 1.0]];
            for _ in 0..3 {
                c.extend(single_rb_costs().into_iter().skip(1));
            }
            c
        })
        .unwrap();
        let (policy, _) = value_iteration(&model, &cfg(3, 0.01)).unwrap();
        let b = Belief::uniform(3, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sensed: Vec<_> = (0..3)
            .map(|o| policy.decide(0, &b, o, &mut rng).unwrap().sense)
            .collect();
        assert_eq!(sensed, vec![Some(0), Some(1), Some(2)]);
        assert!(policy.decide(3, &b, 0, &mut rng).is_err());
    }

    #[test]
    fn invalid_settings_rejected() {
        let model = PomdpModel::from_costs(vec![RbProcess::default()], single_rb_costs()).unwrap();
        assert!(value_iteration(&model, &cfg(0, 0.01)).is_err());
        assert!(value_iteration(&model, &cfg(3, 0.0)).is_err());
        assert!(value_iteration(&model, &cfg(3, 0.7)).is_err());
    }

    #[test]
    fn policy_json_round_trip() {
        let model = PomdpModel::from_costs(vec![RbProcess::default(); 3], {
            let mut c = vec![[1.0, 1.0]];
            for _ in 0..3 {
                c.extend(single_rb_costs().into_iter().skip(1));
            }
            c
        })
        .unwrap();
        let (policy, _) = value_iteration(&model, &cfg(4, 0.1)).unwrap();
        let text = policy.to_json().unwrap();
        assert_eq!(Policy::from_json(&text).unwrap(), policy);
    }
}
