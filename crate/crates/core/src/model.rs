//! Network topology, channel gains, coordinator election and link rates.
//!
//! Gains are linear, powers and noise are in watts, bandwidths in hertz and
//! rates in bits per second.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Occupancy of a resource block in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbState {
    Idle,
    Busy,
}

impl RbState {
    pub fn index(self) -> usize {
        match self {
            RbState::Idle => 0,
            RbState::Busy => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            RbState::Idle
        } else {
            RbState::Busy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A machine-type device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtcDevice {
    pub id: usize,
    pub position: Position,
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Power drawn while sensing an RB, in watts.
    pub sense_power: f64,
    /// Local CPU capability in cycles per second.
    pub cpu: f64,
    /// Size of the one data packet the device sends, in bits.
    pub packet_bits: f64,
}

/// One virtual network (slice): its members, elected coordinator and RB split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualNetwork {
    pub id: usize,
    /// Device ids of the slice members, ascending.
    pub devices: Vec<usize>,
    pub coordinator: usize,
    pub coordinator_cpu: f64,
    pub mec_cpu: f64,
    /// RBs used to reach the virtual eNodeB directly.
    pub rb_enb: usize,
    /// RBs used to reach the coordinator.
    pub rb_coord: usize,
    /// Dedicated coordinator to eNodeB RBs.
    pub rb_backhaul: usize,
    pub rb_bandwidth_access: f64,
    pub rb_bandwidth_backhaul: f64,
    pub noise_access: f64,
    pub noise_backhaul: f64,
}

impl VirtualNetwork {
    /// Total access RBs of the slice.
    pub fn rb_count(&self) -> usize {
        self.rb_enb + self.rb_coord
    }

    /// Slice members other than the coordinator, in id order.
    pub fn ordinary_members(&self) -> impl Iterator<Item = usize> + '_ {
        self.devices.iter().copied().filter(move |&d| d != self.coordinator)
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() {
            return Err(Error::config(
                "devices",
                format!("virtual network {} has no members", self.id),
            ));
        }
        if !self.devices.contains(&self.coordinator) {
            return Err(Error::config("coordinator", "coordinator is not a member of its slice"));
        }
        for (key, v) in [
            ("coordinator_cpu", self.coordinator_cpu),
            ("mec_cpu", self.mec_cpu),
            ("rb_bandwidth_access", self.rb_bandwidth_access),
            ("rb_bandwidth_backhaul", self.rb_bandwidth_backhaul),
            ("noise_access", self.noise_access),
            ("noise_backhaul", self.noise_backhaul),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Distance power-law path gain, `max(d, d_min)^-γ` with distances measured in
/// units of `reference_distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    pub exponent: f64,
    /// Distances below this floor (meters) are clamped to it.
    pub min_distance: f64,
    /// Distance (meters) at which the gain is exactly one.
    pub reference_distance: f64,
}

impl Default for PropagationModel {
    fn default() -> Self {
        PropagationModel {
            exponent: 4.0,
            min_distance: 1.0,
            reference_distance: 1.0,
        }
    }
}

impl PropagationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::config(
                "pathloss_exponent",
                format!("must be positive, got {}", self.exponent),
            ));
        }
        if !(self.min_distance > 0.0) {
            return Err(Error::config("min_distance", "must be positive"));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::config("reference_distance", "must be positive"));
        }
        Ok(())
    }

    pub fn gain(&self, distance: f64) -> f64 {
        let d = distance.max(self.min_distance) / self.reference_distance;
        d.powf(-self.exponent)
    }
}

/// Linear channel gains of every link in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    /// Symmetric device-to-device gains; the diagonal is zero and never used.
    pub device_to_device: Vec<Vec<f64>>,
    /// Per-device, per-access-RB gain towards the eNodeB.
    pub device_to_enb: Vec<Vec<f64>>,
    /// Per-network, per-backhaul-RB gain from the coordinator to the eNodeB.
    /// Empty until coordinators are elected.
    pub coord_to_enb: Vec<Vec<f64>>,
}

impl ChannelGains {
    pub fn device_count(&self) -> usize {
        self.device_to_device.len()
    }

    pub fn between(&self, a: usize, b: usize) -> f64 {
        self.device_to_device[a][b]
    }
}

/// Computes every device-to-device and device-to-eNodeB gain.
///
/// Coincident positions are clamped to the propagation floor distance.
pub fn derive_gains(
    propagation: &PropagationModel,
    positions: &[Position],
    enb: Position,
    access_rbs: usize,
) -> Result<ChannelGains> {
    propagation.validate()?;
    let n = positions.len();
    let mut d2d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let g = propagation.gain(positions[i].distance(&positions[j]));
            d2d[i][j] = g;
            d2d[j][i] = g;
        }
    }
    let device_to_enb = positions
        .iter()
        .map(|p| vec![propagation.gain(p.distance(&enb)); access_rbs])
        .collect();
    Ok(ChannelGains {
        device_to_device: d2d,
        device_to_enb,
        coord_to_enb: Vec::new(),
    })
}

/// Elects the member with the largest mean gain to the other members.
///
/// Ties go to the lowest device id; a singleton slice elects its only member.
pub fn select_coordinator(gains: &ChannelGains, members: &[usize]) -> Result<usize> {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    match sorted.len() {
        0 => Err(Error::config("devices", "cannot elect a coordinator in an empty slice")),
        1 => Ok(sorted[0]),
        n => {
            let mut best = sorted[0];
            let mut best_mean = f64::NEG_INFINITY;
            for &x in &sorted {
                let sum: f64 = sorted.iter().filter(|&&y| y != x).map(|&y| gains.between(x, y)).sum();
                let mean = sum / (n - 1) as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best = x;
                }
            }
            Ok(best)
        }
    }
}

/// Shannon rate of an access link on one RB.
///
/// An idle RB is interference free; on a busy RB the listed `(power, gain)`
/// interferers add to the noise floor.
pub fn uplink_rate(
    bandwidth: f64,
    tx_power: f64,
    gain: f64,
    interferers: &[(f64, f64)],
    noise: f64,
    state: RbState,
) -> f64 {
    let interference = match state {
        RbState::Idle => 0.0,
        RbState::Busy => interferers.iter().map(|(p, h)| p * h).sum(),
    };
    bandwidth * (1.0 + tx_power * gain / (interference + noise)).log2()
}

/// Rate of the dedicated coordinator to eNodeB link.
pub fn backhaul_rate(bandwidth: f64, tx_power: f64, gain: f64, noise: f64) -> f64 {
    bandwidth * (1.0 + tx_power * gain / noise).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gains_from(matrix: Vec<Vec<f64>>) -> ChannelGains {
        let n = matrix.len();
        ChannelGains {
            device_to_device: matrix,
            device_to_enb: vec![vec![1.0]; n],
            coord_to_enb: Vec::new(),
        }
    }

    #[test]
    fn gain_power_law() {
        let p = PropagationModel::default();
        assert_eq!(p.gain(1.0), 1.0);
        assert_relative_eq!(p.gain(10.0), 1.0e-4, max_relative = 1e-15);
        assert_eq!(p.gain(0.5), 1.0);
        assert_eq!(p.gain(0.0), 1.0);
    }

    #[test]
    fn derive_gains_two_devices() {
        let p = PropagationModel::default();
        let pos = [Position::new(0.0, 0.0), Position::new(10.0, 0.0)];
        let g = derive_gains(&p, &pos, Position::new(1.0, 0.0), 2).unwrap();
        assert_relative_eq!(g.between(0, 1), 1.0e-4, max_relative = 1e-15);
        assert_eq!(g.between(0, 1), g.between(1, 0));
        assert_eq!(g.device_to_enb[0], vec![1.0, 1.0]);
        assert_relative_eq!(g.device_to_enb[1][0], 9.0f64.powi(-4), max_relative = 1e-15);
    }

    #[test]
    fn derive_gains_rejects_bad_exponent() {
        let p = PropagationModel {
            exponent: 0.0,
            ..Default::default()
        };
        let err = derive_gains(&p, &[Position::ORIGIN], Position::ORIGIN, 1).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "pathloss_exponent"));
    }

    #[test]
    fn coordinator_examples() {
        let equal = gains_from(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]);
        assert_eq!(select_coordinator(&equal, &[2, 1, 0]).unwrap(), 0);

        let skewed = gains_from(vec![vec![0.0, 0.9, 0.9], vec![0.9, 0.0, 0.1], vec![0.9, 0.1, 0.0]]);
        assert_eq!(select_coordinator(&skewed, &[0, 1, 2]).unwrap(), 0);

        let pair = gains_from(vec![vec![0.0, 0.3], vec![0.3, 0.0]]);
        assert_eq!(select_coordinator(&pair, &[1, 0]).unwrap(), 0);

        assert_eq!(select_coordinator(&pair, &[1]).unwrap(), 1);
        assert!(select_coordinator(&pair, &[]).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_relative_eq!(
            uplink_rate(5e6, 0.1, 1.0, &[], 0.001, RbState::Idle),
            33_291_057.413_758_975,
            max_relative = 1e-12
        );
        assert_eq!(uplink_rate(5e6, 0.0, 1.0, &[], 0.001, RbState::Idle), 0.0);
        let busy = uplink_rate(5e6, 0.1, 1.0, &[(0.1, 1.0)], 0.001, RbState::Busy);
        assert_relative_eq!(busy, 4.9644e6, max_relative = 1e-4);
        assert_relative_eq!(backhaul_rate(1e7, 0.1, 1.0, 0.001), 6.6582e7, max_relative = 1e-4);
        assert_eq!(backhaul_rate(1e7, 0.0, 1.0, 0.001), 0.0);
        assert_relative_eq!(
            backhaul_rate(2e7, 0.1, 0.3, 0.001),
            2.0 * backhaul_rate(1e7, 0.1, 0.3, 0.001),
            max_relative = 1e-15
        );
    }

    proptest! {
        #[test]
        fn coordinator_is_scale_invariant(
            raw in proptest::collection::vec(0.01f64..10.0, 10),
            scale in 0.001f64..1000.0,
        ) {
            // 5 devices, upper triangle from `raw`
            let mut m = vec![vec![0.0; 5]; 5];
            let mut it = raw.iter();
            for i in 0..5 {
                for j in (i + 1)..5 {
                    let v = *it.next().unwrap();
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
            let members = [0, 1, 2, 3, 4];
            let a = select_coordinator(&gains_from(m), &members).unwrap();
            let b = select_coordinator(&gains_from(scaled), &members).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn busy_never_exceeds_idle(
            b in 1e3f64..1e8, p in 1e-4f64..1.0, h in 1e-6f64..1e3,
            ip in 1e-4f64..1.0, ih in 1e-6f64..1e3, noise in 1e-6f64..1.0,
        ) {
            let idle = uplink_rate(b, p, h, &[(ip, ih)], noise, RbState::Idle);
            let busy = uplink_rate(b, p, h, &[(ip, ih)], noise, RbState::Busy);
            prop_assert!(busy <= idle);
        }

        #[test]
        fn rate_monotone(
            b in 1e3f64..1e8, p in 1e-4f64..1.0, h in 1e-6f64..1e3, noise in 1e-6f64..1.0,
            k in 1.0f64..10.0,
        ) {
            let base = uplink_rate(b, p, h, &[], noise, RbState::Idle);
            prop_assert!(uplink_rate(b, p * k, h, &[], noise, RbState::Idle) >= base);
            prop_assert!(uplink_rate(b * k, p, h, &[], noise, RbState::Idle) >= base);
            prop_assert!(uplink_rate(b, p, h, &[], noise * k, RbState::Idle) <= base);
        }

        #[test]
        fn derive_gains_is_pure(xs in proptest::collection::vec((-1000f64..1000.0, -1000f64..1000.0), 2..8)) {
            let pos: Vec<Position> = xs.iter().map(|&(x, y)| Position::new(x, y)).collect();
            let p = PropagationModel::default();
            let a = derive_gains(&p, &pos, Position::ORIGIN, 3).unwrap();
            let b = derive_gains(&p, &pos, Position::ORIGIN, 3).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
