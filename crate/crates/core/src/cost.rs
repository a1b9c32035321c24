//! Execution time and energy accounting for one slot, and the weighted cost
//! that combines them.
//!
//! Times are seconds, energies joules. The weighted cost mixes the two units;
//! the weights carry the normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputingTask {
    /// Input data that has to be shipped when the task is offloaded, in bits.
    pub input_bits: f64,
    /// CPU cycles needed to finish the task.
    pub cycles: f64,
}

/// Where a task is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    LocalDevice,
    Coordinator,
    MecServer,
}

/// What the radio does during a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    None,
    SenseOnly,
    SenseAndTransmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotCosts {
    pub exec_time: f64,
    pub energy: f64,
    pub scalar_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight of execution time.
    pub zeta: f64,
    /// Weight of energy.
    pub eta: f64,
    /// Duration of one RB sensing, in seconds.
    pub sense_time: f64,
    /// Energy per local CPU cycle, in joules.
    pub cycle_energy_coeff: f64,
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (key, w) in [("zeta", self.zeta), ("eta", self.eta)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(key, format!("weight must lie in [0, 1], got {w}")));
            }
        }
        if (self.zeta + self.eta - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "zeta",
                format!("zeta + eta must equal 1, got {} + {}", self.zeta, self.eta),
            ));
        }
        if !(self.sense_time >= 0.0) {
            return Err(Error::config("sense_time", "must be nonnegative"));
        }
        if !(self.cycle_energy_coeff >= 0.0) {
            return Err(Error::config("cycle_energy_coeff", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Energy per cycle for a CPU running at `cpu_hz`: `1e-11 * F^2` with F in GHz.
pub fn cycle_energy_coeff(cpu_hz: f64) -> f64 {
    let ghz = cpu_hz / 1e9;
    1e-11 * ghz * ghz
}

fn transfer_time(bits: f64, rate: f64, what: &str) -> Result<f64> {
    if bits == 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) {
        return Err(Error::Infeasible(format!("{what} over a link with rate {rate}")));
    }
    Ok(bits / rate)
}

/// Total execution time of `task` under `placement`.
///
/// Remote placements pay the input upload on the corresponding link; an
/// infinite rate makes the upload free.
pub fn exec_time(
    placement: Placement,
    task: &ComputingTask,
    cpu_local: f64,
    cpu_coord: f64,
    cpu_mec: f64,
    rate_to_coord: f64,
    rate_to_enb: f64,
) -> Result<f64> {
    match placement {
        Placement::LocalDevice => Ok(task.cycles / cpu_local),
        Placement::Coordinator => {
            Ok(transfer_time(task.input_bits, rate_to_coord, "coordinator offload")? + task.cycles / cpu_coord)
        }
        Placement::MecServer => Ok(transfer_time(task.input_bits, rate_to_enb, "MEC offload")? + task.cycles / cpu_mec),
    }
}

/// Packet transmission time over the accessed link.
pub fn tx_time(packet_bits: f64, rate: f64) -> Result<f64> {
    transfer_time(packet_bits, rate, "packet transmission")
}

pub fn access_energy(mode: AccessMode, sense_power: f64, tx_power: f64, sense_time: f64, tx_time: f64) -> f64 {
    match mode {
        AccessMode::None => 0.0,
        AccessMode::SenseOnly => sense_power * sense_time,
        AccessMode::SenseAndTransmit => tx_power * tx_time + sense_power * sense_time,
    }
}

/// Energy the device spends on the computing task itself.
///
/// Local execution burns CPU cycles; remote execution costs the device only
/// the upload of the task input.
pub fn compute_energy(
    placement: Placement,
    task: &ComputingTask,
    cycle_energy_coeff: f64,
    tx_power: f64,
    rate_to_coord: f64,
    rate_to_enb: f64,
) -> Result<f64> {
    match placement {
        Placement::LocalDevice => Ok(cycle_energy_coeff * task.cycles),
        Placement::Coordinator => Ok(tx_power * transfer_time(task.input_bits, rate_to_coord, "coordinator offload")?),
        Placement::MecServer => Ok(tx_power * transfer_time(task.input_bits, rate_to_enb, "MEC offload")?),
    }
}

pub fn total_energy(access_e: f64, compute_e: f64) -> f64 {
    access_e + compute_e
}

pub fn slot_cost(weights: &CostWeights, exec_time: f64, energy: f64) -> f64 {
    weights.zeta * exec_time + weights.eta * energy
}

/// Everything needed to price one slot of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub weights: CostWeights,
    pub task: ComputingTask,
    pub tx_power: f64,
    pub sense_power: f64,
    pub packet_bits: f64,
    pub cpu_local: f64,
    pub cpu_coord: f64,
    pub cpu_mec: f64,
    /// Coordinator to eNodeB rate; when set, coordinator placement also pays
    /// the backhaul hop for the task input.
    pub backhaul_rate: Option<f64>,
}

impl CostParams {
    /// Prices a slot. `link_rate` is the rate of the accessed link and is
    /// ignored when nothing is transmitted. Remote placements must use the
    /// link they offload over, so the same rate serves both the packet and
    /// the task input.
    pub fn slot_costs(&self, mode: AccessMode, placement: Placement, link_rate: f64) -> Result<SlotCosts> {
        let transmitting = mode == AccessMode::SenseAndTransmit;
        if placement != Placement::LocalDevice && !transmitting {
            return Err(Error::Infeasible(format!("{placement:?} placement without access")));
        }
        let rate = if transmitting { link_rate } else { 0.0 };
        let t_tr = if transmitting {
            tx_time(self.packet_bits, rate)?
        } else {
            0.0
        };
        let mut t = exec_time(
            placement,
            &self.task,
            self.cpu_local,
            self.cpu_coord,
            self.cpu_mec,
            rate,
            rate,
        )?;
        if placement == Placement::Coordinator {
            if let Some(bh) = self.backhaul_rate {
                t += transfer_time(self.task.input_bits, bh, "backhaul hop")?;
            }
        }
        let e_access = access_energy(mode, self.sense_power, self.tx_power, self.weights.sense_time, t_tr);
        let e_compute = compute_energy(
            placement,
            &self.task,
            self.weights.cycle_energy_coeff,
            self.tx_power,
            rate,
            rate,
        )?;
        let energy = total_energy(e_access, e_compute);
        Ok(SlotCosts {
            exec_time: t,
            energy,
            scalar_cost: slot_cost(&self.weights, t, energy),
        })
    }

    /// Prices a slot that only senses or transmits, with no task to run.
    pub fn access_costs(&self, mode: AccessMode, link_rate: f64) -> Result<SlotCosts> {
        let t_tr = match mode {
            AccessMode::SenseAndTransmit => tx_time(self.packet_bits, link_rate)?,
            _ => 0.0,
        };
        let energy = access_energy(mode, self.sense_power, self.tx_power, self.weights.sense_time, t_tr);
        Ok(SlotCosts {
            exec_time: 0.0,
            energy,
            scalar_cost: slot_cost(&self.weights, 0.0, energy),
        })
    }
}
