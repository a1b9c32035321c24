//! Random topology generation: devices in a disc around the eNodeB, split
//! into slices, each with an elected coordinator.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{derive_gains, select_coordinator, ChannelGains, MtcDevice, Position, VirtualNetwork};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub inp_count: usize,
    pub total_devices: usize,
    pub devices: Vec<MtcDevice>,
    pub networks: Vec<VirtualNetwork>,
    pub gains: ChannelGains,
    /// Location of the (virtual) eNodeB serving every slice.
    pub enb: Position,
    pub pathloss_exponent: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn virtual_network_count(&self) -> usize {
        self.networks.len()
    }
}

/// Slice sizes: the focus slice is large enough for `min_focus` members and
/// the remaining devices are spread as evenly as possible over the others.
fn slice_sizes(total: usize, slices: usize, focus: usize, min_focus: usize) -> Result<Vec<usize>> {
    let even = total.div_ceil(slices);
    let focus_size = even.max(min_focus);
    let rest = total
        .checked_sub(focus_size)
        .filter(|&r| r >= slices - 1)
        .ok_or_else(|| Error::config("total_devices", "too few devices for the requested slices"))?;
    let others = slices - 1;
    let mut sizes = Vec::with_capacity(slices);
    let mut k = 0;
    for g in 0..slices {
        if g == focus {
            sizes.push(focus_size);
        } else {
            sizes.push(rest / others + usize::from(k < rest % others));
            k += 1;
        }
    }
    Ok(sizes)
}

/// Builds a reproducible scenario from `config` and `seed`.
///
/// The focus slice always holds at least `config.mtc_count` devices besides
/// its coordinator.
pub fn generate_scenario(config: &RunConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let n = config.total_devices;
    let mut rng = stream(seed, Stream::Topology, 0, 0);
    let positions: Vec<Position> = (0..n)
        .map(|_| {
            let r = config.radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            Position::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    let enb = Position::ORIGIN;
    let propagation = config.propagation();
    let mut gains = derive_gains(&propagation, &positions, enb, config.rb_count())?;

    let devices: Vec<MtcDevice> = positions
        .iter()
        .enumerate()
        .map(|(id, &position)| MtcDevice {
            id,
            position,
            tx_power: config.tx_power,
            sense_power: config.sense_power,
            cpu: config.cpu_local,
            packet_bits: config.packet_size,
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let sizes = slice_sizes(n, config.virtual_networks, config.focus_network, config.mtc_count + 1)?;
    let mut networks = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for (g, &size) in sizes.iter().enumerate() {
        let mut members = order[start..start + size].to_vec();
        members.sort_unstable();
        start += size;
        let coordinator = select_coordinator(&gains, &members)?;
        gains.coord_to_enb.push(vec![
            propagation.gain(positions[coordinator].distance(&enb));
            config.rb_backhaul
        ]);
        networks.push(VirtualNetwork {
            id: g,
            devices: members,
            coordinator,
            coordinator_cpu: config.cpu_coordinator,
            mec_cpu: config.cpu_mec,
            rb_enb: config.rb_enb,
            rb_coord: config.rb_coordinator,
            rb_backhaul: config.rb_backhaul,
            rb_bandwidth_access: config.access_bandwidth,
            rb_bandwidth_backhaul: config.backhaul_bandwidth,
            noise_access: config.noise,
            noise_backhaul: config.backhaul_noise,
        });
    }
    Ok(Scenario {
        inp_count: config.inp_count,
        total_devices: n,
        devices,
        networks,
        gains,
        enb,
        pathloss_exponent: config.pathloss_exponent,
        rng_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let c = RunConfig::default();
        assert_eq!(generate_scenario(&c, 9).unwrap(), generate_scenario(&c, 9).unwrap());
        assert_ne!(generate_scenario(&c, 9).unwrap(), generate_scenario(&c, 10).unwrap());
    }

    #[test]
    fn slices_partition_the_devices() {
        let s = generate_scenario(&RunConfig::default(), 3).unwrap();
        assert_eq!(s.virtual_network_count(), 5);
        assert_eq!(s.networks.iter().map(|n| n.devices.len()).sum::<usize>(), 50);
        let mut all: Vec<usize> = s.networks.iter().flat_map(|n| n.devices.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        for net in &s.networks {
            net.validate().unwrap();
        }
        for d in &s.devices {
            assert!(d.position.distance(&Position::ORIGIN) <= 1000.0);
        }
    }

    #[test]
    fn focus_slice_grows_for_many_devices() {
        let c = RunConfig {
            mtc_count: 15,
            ..RunConfig::default()
        };
        let s = generate_scenario(&c, 3).unwrap();
        assert_eq!(s.networks[0].devices.len(), 16);
        assert_eq!(s.networks.iter().map(|n| n.devices.len()).sum::<usize>(), 50);
        assert_eq!(slice_sizes(50, 5, 0, 10).unwrap(), vec![10, 10, 10, 10, 10]);
        assert_eq!(slice_sizes(50, 5, 2, 16).unwrap(), vec![9, 9, 16, 8, 8]);
        assert!(slice_sizes(5, 5, 0, 3).is_err());
    }

    #[test]
    fn coordinator_has_best_mean_gain() {
        let s = generate_scenario(&RunConfig::default(), 5).unwrap();
        for net in &s.networks {
            // independent recomputation straight from positions
            let prop = RunConfig::default().propagation();
            let mean = |x: usize| {
                let others: Vec<_> = net.devices.iter().filter(|&&y| y != x).collect();
                others
                    .iter()
                    .map(|&&y| prop.gain(s.devices[x].position.distance(&s.devices[y].position)))
                    .sum::<f64>()
                    / others.len() as f64
            };
            let best = mean(net.coordinator);
            for &x in &net.devices {
                assert!(mean(x) <= best * (1.0 + 1e-12));
            }
        }
    }
}
