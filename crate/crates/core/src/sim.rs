//! Slot-level simulation of one slice: ground-truth RB chains, noisy
//! sensing, per-device belief tracking, policy decisions and cost accrual.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::cost::{CostParams, SlotCosts};
use crate::error::{Error, Result};
use crate::model::{backhaul_rate, uplink_rate, MtcDevice, RbState, VirtualNetwork};
use crate::pomdp::{belief_update, observation_prob, AccessTarget, Belief, CompositeAction, Observation, RbProcess};
use crate::rng::{stream, Stream};
use crate::scenario::{generate_scenario, Scenario};
use crate::solver::{
    baseline_policy, value_iteration, LinkRates, OracleNode, Policy, PolicyKind, PomdpModel, SolverConfig,
};

/// One step of a single RB chain driven by `rng`.
pub fn evolve_rb_state<R: Rng + ?Sized>(state: RbState, proc: &RbProcess, rng: &mut R) -> RbState {
    let u: f64 = rng.random();
    if u < proc.transition(state, RbState::Idle) {
        RbState::Idle
    } else {
        RbState::Busy
    }
}

/// Advances every RB independently, one uniform draw per RB in index order.
pub fn evolve_rb_states<R: Rng + ?Sized>(states: &[RbState], procs: &[RbProcess], rng: &mut R) -> Vec<RbState> {
    states
        .iter()
        .zip(procs)
        .map(|(&s, p)| evolve_rb_state(s, p, rng))
        .collect()
}

fn draw_state<R: Rng + ?Sized>(idle_prob: f64, rng: &mut R) -> RbState {
    if rng.random::<f64>() < idle_prob {
        RbState::Idle
    } else {
        RbState::Busy
    }
}

fn draw_observation<R: Rng + ?Sized>(proc: &RbProcess, truth: RbState, rng: &mut R) -> RbState {
    if rng.random::<f64>() < observation_prob(proc, true, truth, RbState::Idle) {
        RbState::Idle
    } else {
        RbState::Busy
    }
}

/// Empirical behaviour of a long single-RB run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStats {
    /// Row-normalized transition frequencies, `[from][to]`.
    pub transitions: [[f64; 2]; 2],
    pub busy_fraction: f64,
    pub steps: usize,
}

/// Runs one RB chain for `steps` transitions from its stationary law.
pub fn chain_statistics(proc: &RbProcess, steps: usize, seed: u64) -> ChainStats {
    let mut rng = stream(seed, Stream::RbTruth, 0, 0);
    let mut state = draw_state(proc.stationary_idle(), &mut rng);
    let mut counts = [[0usize; 2]; 2];
    let mut busy = 0usize;
    for _ in 0..steps {
        let next = evolve_rb_state(state, proc, &mut rng);
        counts[state.index()][next.index()] += 1;
        busy += usize::from(next == RbState::Busy);
        state = next;
    }
    let mut transitions = [[0.0; 2]; 2];
    for (row, c) in transitions.iter_mut().zip(&counts) {
        let n = (c[0] + c[1]).max(1) as f64;
        *row = [c[0] as f64 / n, c[1] as f64 / n];
    }
    ChainStats {
        transitions,
        busy_fraction: busy as f64 / steps.max(1) as f64,
        steps,
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// When devices receive computing tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskArrival {
    /// A fresh task every slot; each slot pays the full cost of its action.
    #[default]
    PerSlot,
    /// One task per frame. The first slot runs it; later slots pay only for
    /// sensing and transmission.
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub slots_per_frame: usize,
    pub frames: usize,
    pub rng_seed: u64,
    /// Redraw RB states from the stationary law at every frame boundary.
    pub reset_rb_each_frame: bool,
    pub task_arrival: TaskArrival,
}

impl FrameConfig {
    pub fn from_config(config: &RunConfig) -> Self {
        FrameConfig {
            slots_per_frame: config.slots_per_frame,
            frames: config.frames,
            rng_seed: config.seed,
            reset_rb_each_frame: config.reset_rb_each_frame,
            task_arrival: config.task_arrival,
        }
    }
}

/// Everything about one slice that the simulator and solver need: the active
/// devices, their gains and cost parameters, the RB chains and the busy-RB
/// occupants.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceModel {
    pub network: VirtualNetwork,
    /// Active devices in ordinal order.
    pub devices: Vec<MtcDevice>,
    pub processes: Vec<RbProcess>,
    pub params: Vec<CostParams>,
    /// `enb_gain[i][r]`: device `i` towards the eNodeB on RB `r`.
    pub enb_gain: Vec<Vec<f64>>,
    /// `coord_gain[i]`: device `i` towards the coordinator.
    pub coord_gain: Vec<f64>,
    /// `(power, gain)` of the transmitters occupying a busy RB.
    pub background: Vec<(f64, f64)>,
    /// Whether devices on the same RB in the same slot interfere.
    pub contention: bool,
}

impl SliceModel {
    /// Slice `config.focus_network` of `scenario` with its first
    /// `mtc_count` non-coordinator members active.
    pub fn from_scenario(scenario: &Scenario, config: &RunConfig, mtc_count: usize) -> Result<Self> {
        let network = scenario
            .networks
            .get(config.focus_network)
            .ok_or_else(|| Error::config("focus_network", "no such virtual network"))?
            .clone();
        let ids: Vec<usize> = network.ordinary_members().take(mtc_count).collect();
        if ids.len() < mtc_count {
            return Err(Error::config(
                "mtc_count",
                format!(
                    "slice {} has only {} devices besides its coordinator",
                    network.id,
                    ids.len()
                ),
            ));
        }
        let backhaul = if config.coordinator_backhaul_hop {
            let g = scenario.gains.coord_to_enb[network.id]
                .first()
                .copied()
                .ok_or_else(|| Error::config("rb_backhaul", "the backhaul hop needs at least one backhaul RB"))?;
            Some(backhaul_rate(
                network.rb_bandwidth_backhaul,
                config.tx_power,
                g,
                network.noise_backhaul,
            ))
        } else {
            None
        };
        let devices: Vec<MtcDevice> = ids.iter().map(|&i| scenario.devices[i].clone()).collect();
        let params = devices
            .iter()
            .map(|d| CostParams {
                weights: config.weights(),
                task: config.task(),
                tx_power: d.tx_power,
                sense_power: d.sense_power,
                packet_bits: d.packet_bits,
                cpu_local: d.cpu,
                cpu_coord: network.coordinator_cpu,
                cpu_mec: network.mec_cpu,
                backhaul_rate: backhaul,
            })
            .collect();
        Ok(SliceModel {
            enb_gain: ids.iter().map(|&i| scenario.gains.device_to_enb[i].clone()).collect(),
            coord_gain: ids
                .iter()
                .map(|&i| scenario.gains.between(i, network.coordinator))
                .collect(),
            processes: vec![config.rb_process(); network.rb_count()],
            background: vec![(config.tx_power, config.busy_interferer_gain); config.busy_interferers],
            contention: config.contention,
            network,
            devices,
            params,
        })
    }

    pub fn mtc_count(&self) -> usize {
        self.devices.len()
    }

    fn receiver_gain(&self, i: usize, target: AccessTarget, rb: usize) -> f64 {
        match target {
            AccessTarget::Enb => self.enb_gain[i][rb],
            AccessTarget::Coordinator => self.coord_gain[i],
        }
    }

    /// Idle and busy rates of device `i` when it is alone on the RB.
    pub fn link_rates(&self, i: usize) -> LinkRates {
        let net = &self.network;
        let p = self.devices[i].tx_power;
        let pair = |h: f64| {
            [
                uplink_rate(net.rb_bandwidth_access, p, h, &[], net.noise_access, RbState::Idle),
                uplink_rate(
                    net.rb_bandwidth_access,
                    p,
                    h,
                    &self.background,
                    net.noise_access,
                    RbState::Busy,
                ),
            ]
        };
        LinkRates {
            enb: (0..net.rb_count()).map(|r| pair(self.enb_gain[i][r])).collect(),
            coord: (0..net.rb_count()).map(|_| pair(self.coord_gain[i])).collect(),
        }
    }

    pub fn pomdp_model(&self, i: usize) -> Result<PomdpModel> {
        PomdpModel::new(self.processes.clone(), &self.params[i], &self.link_rates(i))
    }

    /// Solves one POMDP policy per active device.
    pub fn solve_policies(&self, solver: &SolverConfig) -> Result<Vec<Policy>> {
        (0..self.mtc_count())
            .into_par_iter()
            .map(|i| {
                let mut policy = value_iteration(&self.pomdp_model(i)?, solver)?.0;
                policy.metadata.insert("device".into(), self.devices[i].id.to_string());
                Ok(policy)
            })
            .collect()
    }

    /// Policies of `kind` for every active device.
    pub fn policies(&self, kind: PolicyKind, solver: &SolverConfig, seed: u64) -> Result<Vec<Policy>> {
        match kind {
            PolicyKind::Pomdp => self.solve_policies(solver),
            _ => {
                let p = baseline_policy(kind, self.network.rb_enb, self.network.rb_coord, seed)?;
                Ok(vec![p; self.mtc_count()])
            }
        }
    }
}

/// What happened to one device in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub frame: usize,
    pub slot: usize,
    pub mtc_id: usize,
    pub action: CompositeAction,
    pub observation: Option<RbState>,
    /// Bit `r` set when RB `r` is busy.
    pub rb_truth: u64,
    /// Rate of the accessed link, zero when nothing was sent.
    pub link_rate: f64,
    /// Whether the device still held its task at the start of the slot.
    pub task_pending: bool,
    pub costs: SlotCosts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub slots: usize,
    pub mtc_count: usize,
    /// Cost summed over devices and slots.
    pub total_cost: f64,
    pub total_time: f64,
    pub total_energy: f64,
    /// Per-device cost totals, in ordinal order.
    pub per_mtc_cost: Vec<f64>,
}

impl FrameMetrics {
    /// Mean per-slot system cost (summed over devices).
    pub fn mean_cost(&self) -> f64 {
        self.total_cost / self.slots as f64
    }

    pub fn mean_time(&self) -> f64 {
        self.total_time / self.slots as f64
    }

    pub fn mean_energy(&self) -> f64 {
        self.total_energy / self.slots as f64
    }

    /// Mean cost per device and slot.
    pub fn per_mtc_mean_cost(&self) -> f64 {
        if self.mtc_count == 0 {
            0.0
        } else {
            self.total_cost / (self.slots * self.mtc_count) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub frames: Vec<FrameMetrics>,
    pub traces: Vec<SlotTrace>,
}

/// Per-run mutable state that persists across frames.
struct Carry {
    truth: Vec<RbState>,
    beliefs: Vec<Belief>,
}

/// Runs `frames.frames` consecutive frames. RB chains and device beliefs
/// carry over between frames unless `reset_rb_each_frame` is set.
pub fn run_frames(
    slice: &SliceModel,
    policies: &[Policy],
    frames: &FrameConfig,
    keep_traces: bool,
) -> Result<RunOutput> {
    if policies.len() != slice.mtc_count() {
        return Err(Error::config(
            "policies",
            format!("{} policies for {} devices", policies.len(), slice.mtc_count()),
        ));
    }
    for p in policies {
        if let Some(h) = p.horizon() {
            if h < frames.slots_per_frame {
                return Err(Error::config(
                    "horizon",
                    format!(
                        "policy horizon {h} is shorter than the {}-slot frame",
                        frames.slots_per_frame
                    ),
                ));
            }
        }
    }
    let mut carry = Carry {
        truth: Vec::new(),
        beliefs: Vec::new(),
    };
    let mut out = RunOutput::default();
    for f in 0..frames.frames {
        let (metrics, traces) = run_frame(slice, policies, frames, f, &mut carry, keep_traces)?;
        out.frames.push(metrics);
        out.traces.extend(traces);
    }
    Ok(out)
}

fn run_frame(
    slice: &SliceModel,
    policies: &[Policy],
    frames: &FrameConfig,
    frame: usize,
    carry: &mut Carry,
    keep_traces: bool,
) -> Result<(FrameMetrics, Vec<SlotTrace>)> {
    let seed = frames.rng_seed;
    let rb_count = slice.processes.len();
    let m = slice.mtc_count();
    let f = frame as u64;
    let mut rb_rng: Vec<ChaCha8Rng> = (0..rb_count)
        .map(|r| stream(seed, Stream::RbTruth, r as u64, f))
        .collect();
    let mut obs_rng: Vec<ChaCha8Rng> = slice
        .devices
        .iter()
        .map(|d| stream(seed, Stream::Observation, d.id as u64, f))
        .collect();
    let mut policy_rng: Vec<ChaCha8Rng> = slice
        .devices
        .iter()
        .zip(policies)
        .map(|(d, p)| stream(p.seed().unwrap_or(seed), Stream::Policy, d.id as u64, f))
        .collect();

    if frame == 0 || frames.reset_rb_each_frame {
        // state before the first slot, drawn from the stationary law
        carry.truth = slice
            .processes
            .iter()
            .zip(rb_rng.iter_mut())
            .map(|(p, rng)| draw_state(p.stationary_idle(), rng))
            .collect();
        carry.beliefs = vec![Belief::stationary(&slice.processes); m];
    }

    let mut total = CompensatedSum::default();
    let mut time = CompensatedSum::default();
    let mut energy = CompensatedSum::default();
    let mut per_mtc = vec![CompensatedSum::default(); m];
    let mut traces = Vec::new();
    let mut actions = vec![CompositeAction::SLEEP; m];

    for k in 0..frames.slots_per_frame {
        for i in 0..m {
            actions[i] = policies[i].decide(k, &carry.beliefs[i], i, &mut policy_rng[i])?;
        }
        for r in 0..rb_count {
            carry.truth[r] = evolve_rb_state(carry.truth[r], &slice.processes[r], &mut rb_rng[r]);
        }
        let truth_mask =
            carry
                .truth
                .iter()
                .enumerate()
                .fold(0u64, |acc, (r, s)| if *s == RbState::Busy { acc | 1 << r } else { acc });

        for i in 0..m {
            let action = actions[i];
            let link_rate = match (action.sense, action.access) {
                (Some(r), Some(target)) => realized_rate(slice, &actions, &carry.truth, i, r, target),
                _ => 0.0,
            };
            let task_pending = frames.task_arrival == TaskArrival::PerSlot || k == 0;
            let costs = if task_pending {
                slice.params[i].slot_costs(action.access_mode(), action.placement(), link_rate)?
            } else {
                slice.params[i].access_costs(action.access_mode(), link_rate)?
            };
            let observation = match action.sense {
                Some(r) => {
                    let obs = draw_observation(&slice.processes[r], carry.truth[r], &mut obs_rng[i]);
                    Some(Observation { rb: r, state: obs })
                }
                None => None,
            };
            carry.beliefs[i] = belief_update(&carry.beliefs[i], &action, observation, &slice.processes)?;

            total.add(costs.scalar_cost);
            time.add(costs.exec_time);
            energy.add(costs.energy);
            per_mtc[i].add(costs.scalar_cost);
            if keep_traces {
                traces.push(SlotTrace {
                    frame,
                    slot: k,
                    mtc_id: slice.devices[i].id,
                    action,
                    observation: observation.map(|o| o.state),
                    rb_truth: truth_mask,
                    link_rate,
                    task_pending,
                    costs,
                });
            }
        }
    }
    let metrics = FrameMetrics {
        frame,
        slots: frames.slots_per_frame,
        mtc_count: m,
        total_cost: total.value(),
        total_time: time.value(),
        total_energy: energy.value(),
        per_mtc_cost: per_mtc.iter().map(CompensatedSum::value).collect(),
    };
    Ok((metrics, traces))
}

/// Rate of device `i` on RB `rb` towards `target`, given the busy-RB
/// occupants and every other device transmitting on the same RB.
fn realized_rate(
    slice: &SliceModel,
    actions: &[CompositeAction],
    truth: &[RbState],
    i: usize,
    rb: usize,
    target: AccessTarget,
) -> f64 {
    let mut interferers: Vec<(f64, f64)> = Vec::new();
    if truth[rb] == RbState::Busy {
        interferers.extend_from_slice(&slice.background);
    }
    if slice.contention {
        for (j, other) in actions.iter().enumerate() {
            if j != i && other.sense == Some(rb) && other.access.is_some() {
                interferers.push((slice.devices[j].tx_power, slice.receiver_gain(j, target, rb)));
            }
        }
    }
    let state = if interferers.is_empty() {
        RbState::Idle
    } else {
        RbState::Busy
    };
    let net = &slice.network;
    uplink_rate(
        net.rb_bandwidth_access,
        slice.devices[i].tx_power,
        slice.receiver_gain(i, target, rb),
        &interferers,
        net.noise_access,
        state,
    )
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Task CPU cycles.
    Cycles(Vec<f64>),
    /// Number of active devices in the focus slice.
    Mtcs(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Cycles(_) => "cycles",
            SweepAxis::Mtcs(_) => "mtcs",
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::Cycles(v) => v.clone(),
            SweepAxis::Mtcs(v) => v.iter().map(|&m| m as f64).collect(),
        }
    }
}

/// One line of sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis: f64,
    pub policy: PolicyKind,
    pub frame: usize,
    pub mean_cost: f64,
    pub total_cost: f64,
    pub mean_time_s: f64,
    pub mean_energy_j: f64,
}

fn rows(axis: f64, policy: PolicyKind, out: &RunOutput) -> Vec<ResultRow> {
    out.frames
        .iter()
        .map(|m| ResultRow {
            axis,
            policy,
            frame: m.frame,
            mean_cost: m.mean_cost(),
            total_cost: m.total_cost,
            mean_time_s: m.mean_time(),
            mean_energy_j: m.mean_energy(),
        })
        .collect()
}

/// Runs every policy at every axis value. Rows are ordered by axis value,
/// then policy (in the order given), then frame.
///
/// The cycles axis changes the cost structure, so POMDP policies are solved
/// again for each value. The device-count axis reuses one set of per-device
/// policies: every grid value activates a prefix of the same devices.
pub fn sweep(config: &RunConfig, axis: &SweepAxis, policies: &[PolicyKind]) -> Result<Vec<ResultRow>> {
    let values = axis.values();
    if values.is_empty() {
        return Err(Error::config("sweep", "the sweep grid is empty"));
    }
    let frames = FrameConfig::from_config(config);
    let solver = config.solver();
    let per_value: Vec<Vec<ResultRow>> = match axis {
        SweepAxis::Cycles(cycles) => {
            let scenario = generate_scenario(config, config.seed)?;
            cycles
                .par_iter()
                .map(|&beta| {
                    let mut c = config.clone();
                    c.task_cycles = beta;
                    c.validate()?;
                    let slice = SliceModel::from_scenario(&scenario, &c, c.mtc_count)?;
                    let mut out = Vec::new();
                    for &kind in policies {
                        let ps = slice.policies(kind, &solver, config.seed)?;
                        out.extend(rows(beta, kind, &run_frames(&slice, &ps, &frames, false)?));
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
        SweepAxis::Mtcs(counts) => {
            let max = counts.iter().copied().max().unwrap_or(0);
            let mut c = config.clone();
            c.mtc_count = max;
            c.validate()?;
            let scenario = generate_scenario(&c, config.seed)?;
            let full = SliceModel::from_scenario(&scenario, &c, max)?;
            let solved: Vec<(PolicyKind, Vec<Policy>)> = policies
                .iter()
                .map(|&kind| Ok((kind, full.policies(kind, &solver, config.seed)?)))
                .collect::<Result<_>>()?;
            counts
                .par_iter()
                .map(|&m| {
                    let slice = SliceModel::from_scenario(&scenario, &c, m)?;
                    let mut out = Vec::new();
                    for (kind, ps) in &solved {
                        out.extend(rows(m as f64, *kind, &run_frames(&slice, &ps[..m], &frames, false)?));
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(per_value.into_iter().flatten().collect())
}

/// Single-device decision maker for episode evaluation.
pub trait Controller {
    /// Called at the start of every episode.
    fn begin(&mut self) {}
    fn act(&mut self, slot: usize, belief: &Belief) -> Result<CompositeAction>;
    fn observe(&mut self, _obs: Option<Observation>) {}
}

/// Drives a [`Policy`] as device ordinal 0.
pub struct PolicyController<'a> {
    pub policy: &'a Policy,
    rng: ChaCha8Rng,
}

impl<'a> PolicyController<'a> {
    pub fn new(policy: &'a Policy, seed: u64) -> Self {
        PolicyController {
            policy,
            rng: stream(seed, Stream::Policy, 0, 0),
        }
    }
}

impl Controller for PolicyController<'_> {
    fn act(&mut self, slot: usize, belief: &Belief) -> Result<CompositeAction> {
        self.policy.decide(slot, belief, 0, &mut self.rng)
    }
}

/// Walks the exact decision tree of the brute-force oracle.
pub struct OracleController<'a> {
    root: &'a OracleNode,
    cursor: Option<&'a OracleNode>,
}

impl<'a> OracleController<'a> {
    pub fn new(root: &'a OracleNode) -> Self {
        OracleController {
            root,
            cursor: Some(root),
        }
    }
}

impl Controller for OracleController<'_> {
    fn begin(&mut self) {
        self.cursor = Some(self.root);
    }

    fn act(&mut self, slot: usize, _belief: &Belief) -> Result<CompositeAction> {
        self.cursor
            .map(|n| n.action)
            .ok_or_else(|| Error::config("horizon", format!("oracle tree ends before slot {slot}")))
    }

    fn observe(&mut self, obs: Option<Observation>) {
        self.cursor = self.cursor.and_then(|n| n.child(obs.map(|o| o.state)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
}

/// Monte-Carlo cost of a controller on `model` over `horizon` slots.
///
/// Episode `e` always consumes the same uniforms (one transition draw and
/// one observation draw per RB and slot), so two controllers evaluated with
/// the same seed see common random numbers.
pub fn simulate_episodes(
    model: &PomdpModel,
    controller: &mut dyn Controller,
    initial: &Belief,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<EpisodeStats> {
    let rb_count = model.rb_count();
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    let mut truth = vec![RbState::Idle; rb_count];
    let mut u_obs = vec![0.0; rb_count];
    for e in 0..episodes {
        let mut rng = stream(seed, Stream::Episode, e as u64, 0);
        for r in 0..rb_count {
            truth[r] = draw_state(initial.idle(r), &mut rng);
        }
        let mut belief = initial.clone();
        controller.begin();
        let mut cost = 0.0;
        for k in 0..horizon {
            let action = controller.act(k, &belief)?;
            let a = model
                .actions
                .iter()
                .position(|x| *x == action)
                .ok_or_else(|| Error::config("action", format!("{action} is not in the model")))?;
            for r in 0..rb_count {
                truth[r] = evolve_rb_state(truth[r], &model.processes[r], &mut rng);
                u_obs[r] = rng.random();
            }
            let state = action.sense.map_or(RbState::Idle, |r| truth[r]);
            cost += model.costs[a][state.index()];
            let obs = action.sense.map(|r| {
                let p_idle = observation_prob(&model.processes[r], true, truth[r], RbState::Idle);
                Observation {
                    rb: r,
                    state: if u_obs[r] < p_idle {
                        RbState::Idle
                    } else {
                        RbState::Busy
                    },
                }
            });
            belief = belief_update(&belief, &action, obs, &model.processes)?;
            controller.observe(obs);
        }
        sum.add(cost);
        sum_sq.add(cost * cost);
    }
    let n = episodes.max(1) as f64;
    let mean = sum.value() / n;
    let var = (sum_sq.value() / n - mean * mean).max(0.0);
    Ok(EpisodeStats {
        mean,
        std_error: (var / n).sqrt(),
        episodes,
    })
}
