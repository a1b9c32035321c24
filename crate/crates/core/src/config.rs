//! Run configuration: a flat JSON object whose absent keys take the
//! reference defaults.
//!
//! Physical quantities accept either a bare number in base SI units (W, Hz,
//! bits, cycles, s, m) or a string with a unit suffix such as `"100 mW"`,
//! `"5 MHz"`, `"420 KB"`, `"1000 Megacycles"`. Data sizes use binary
//! multipliers: `1 KB = 1024 bytes`. Unknown keys are rejected.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::cost::{cycle_energy_coeff, ComputingTask, CostWeights};
use crate::error::{Error, Result};
use crate::model::PropagationModel;
use crate::pomdp::{RbProcess, SensingModel};
use crate::sim::TaskArrival;
use crate::solver::{PolicyKind, SolverConfig, SolverMode};

/// Environment variable overriding the root seed.
pub const ENV_SEED: &str = "MTCSIM_SEED";
/// Environment variable overriding the output directory.
pub const ENV_OUT_DIR: &str = "MTCSIM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub inp_count: usize,
    pub total_devices: usize,
    pub virtual_networks: usize,
    /// Slice whose devices are simulated.
    pub focus_network: usize,
    pub radius: f64,
    pub pathloss_exponent: f64,
    pub min_distance: f64,
    pub reference_distance: f64,

    pub rb_enb: usize,
    pub rb_coordinator: usize,
    pub rb_backhaul: usize,
    pub access_bandwidth: f64,
    pub backhaul_bandwidth: f64,
    pub tx_power: f64,
    pub sense_power: f64,
    pub noise: f64,
    pub backhaul_noise: f64,
    /// Transmitters that occupy a busy RB.
    pub busy_interferers: usize,
    /// Gain of each busy-RB occupant towards any receiver.
    pub busy_interferer_gain: f64,
    /// Whether devices accessing the same RB in a slot interfere.
    pub contention: bool,

    pub packet_size: f64,
    pub task_input: f64,
    pub task_cycles: f64,
    pub cpu_local: f64,
    pub cpu_coordinator: f64,
    pub cpu_mec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_energy_coeff: Option<f64>,
    pub sense_time: f64,
    pub zeta: f64,
    pub eta: f64,
    pub coordinator_backhaul_hop: bool,

    pub p_stay_idle: f64,
    pub p_idle_to_busy: f64,
    pub p_busy_to_idle: f64,
    pub p_stay_busy: f64,
    pub false_obs_sensed: f64,
    pub false_obs_unsensed: f64,
    pub sensing_model: SensingModel,

    pub slots_per_frame: usize,
    pub frames: usize,
    pub mtc_count: usize,
    pub reset_rb_each_frame: bool,
    pub task_arrival: TaskArrival,

    pub grid_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub solver_mode: SolverMode,

    pub sweep_cycles: Vec<f64>,
    pub sweep_mtcs: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inp_count: 3,
            total_devices: 50,
            virtual_networks: 5,
            focus_network: 0,
            radius: 1000.0,
            pathloss_exponent: 4.0,
            min_distance: 1.0,
            reference_distance: 1000.0,

            rb_enb: 3,
            rb_coordinator: 2,
            rb_backhaul: 1,
            access_bandwidth: 5e6,
            backhaul_bandwidth: 10e6,
            tx_power: 0.1,
            sense_power: 0.01,
            noise: 1e-3,
            backhaul_noise: 1e-3,
            busy_interferers: 1,
            busy_interferer_gain: 1.0,
            contention: false,

            packet_size: 2.0 * 1024.0 * 1024.0 * 8.0,
            task_input: 420.0 * 1024.0 * 8.0,
            task_cycles: 1000e6,
            cpu_local: 0.5e9,
            cpu_coordinator: 1e9,
            cpu_mec: 100e9,
            cycle_energy_coeff: None,
            sense_time: 1e-3,
            zeta: 0.5,
            eta: 0.5,
            coordinator_backhaul_hop: false,

            p_stay_idle: 0.8,
            p_idle_to_busy: 0.2,
            p_busy_to_idle: 0.85,
            p_stay_busy: 0.15,
            false_obs_sensed: 0.1,
            false_obs_unsensed: 0.1,
            sensing_model: SensingModel::Symmetric,

            slots_per_frame: 100,
            frames: 10,
            mtc_count: 9,
            reset_rb_each_frame: false,
            task_arrival: TaskArrival::PerSlot,

            grid_step: 0.01,
            horizon: None,
            solver_mode: SolverMode::Auto,

            sweep_cycles: (1..=10).map(|i| i as f64 * 200e6).collect(),
            sweep_mtcs: vec![5, 15],
            policies: vec![PolicyKind::Pomdp, PolicyKind::CoordinatorOnly, PolicyKind::LocalOnly],
            seed: 1,
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Power,
    Frequency,
    Data,
    Cycles,
    Time,
    Distance,
    Energy,
    Scalar,
}

fn unit_factor(dim: Dim, unit: &str) -> Option<f64> {
    let f = match (dim, unit) {
        (Dim::Power, "W") => 1.0,
        (Dim::Power, "mW") => 1e-3,
        (Dim::Power, "uW") => 1e-6,
        (Dim::Frequency, "Hz") => 1.0,
        (Dim::Frequency, "kHz") => 1e3,
        (Dim::Frequency, "MHz") => 1e6,
        (Dim::Frequency, "GHz") => 1e9,
        (Dim::Data, "bit" | "bits") => 1.0,
        (Dim::Data, "B" | "bytes") => 8.0,
        (Dim::Data, "KB") => 8.0 * 1024.0,
        (Dim::Data, "MB") => 8.0 * 1024.0 * 1024.0,
        (Dim::Data, "GB") => 8.0 * 1024.0 * 1024.0 * 1024.0,
        (Dim::Cycles, "cycles") => 1.0,
        (Dim::Cycles, "Kcycles" | "Kilocycles") => 1e3,
        (Dim::Cycles, "Mcycles" | "Megacycles") => 1e6,
        (Dim::Cycles, "Gcycles" | "Gigacycles") => 1e9,
        (Dim::Time, "s") => 1.0,
        (Dim::Time, "ms") => 1e-3,
        (Dim::Time, "us") => 1e-6,
        (Dim::Distance, "m") => 1.0,
        (Dim::Distance, "km" | "KM") => 1e3,
        (Dim::Energy, "J") => 1.0,
        _ => return None,
    };
    Some(f)
}

fn quantity(key: &str, value: &Value, dim: Dim) -> Result<f64> {
    let v = match value {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::config(key, "not a finite number"))?,
        Value::String(s) if dim != Dim::Scalar => {
            let s = s.trim();
            let split = s
                .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
                .or_else(|| s.rfind(' ').map(|i| i + 1))
                .unwrap_or(s.len());
            let (num, unit) = s.split_at(split);
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot read a number from `{s}`")))?;
            let unit = unit.trim();
            if dim == Dim::Power && unit == "dBm" {
                10f64.powf((num - 30.0) / 10.0)
            } else if unit.is_empty() {
                num
            } else {
                num * unit_factor(dim, unit).ok_or_else(|| Error::config(key, format!("unknown unit `{unit}`")))?
            }
        }
        _ => return Err(Error::config(key, format!("expected a number, got {value}"))),
    };
    if !v.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(v)
}

fn count(key: &str, value: &Value) -> Result<usize> {
    value
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::config(key, format!("expected a nonnegative integer, got {value}")))
}

fn flag(key: &str, value: &Value) -> Result<bool> {
    value
        .as_bool()
        .ok_or_else(|| Error::config(key, format!("expected true or false, got {value}")))
}

fn named<T: serde::de::DeserializeOwned>(key: &str, value: &Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::config(key, e.to_string()))
}

fn list<T>(key: &str, value: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match value {
        Value::Array(items) => items.iter().map(|v| item(key, v)).collect(),
        _ => Err(Error::config(key, "expected a list")),
    }
}

/// Parses a configuration document; an empty document yields the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let doc: Value = serde_json::from_str(text)?;
    let Value::Object(map) = doc else {
        return Err(Error::config("<root>", "configuration must be a JSON object"));
    };
    let cfg = apply(RunConfig::default(), &map)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn apply(mut c: RunConfig, map: &Map<String, Value>) -> Result<RunConfig> {
    for (key, v) in map {
        let k = key.as_str();
        match k {
            "inp_count" => c.inp_count = count(k, v)?,
            "total_devices" => c.total_devices = count(k, v)?,
            "virtual_networks" => c.virtual_networks = count(k, v)?,
            "focus_network" => c.focus_network = count(k, v)?,
            "radius" => c.radius = quantity(k, v, Dim::Distance)?,
            "pathloss_exponent" => c.pathloss_exponent = quantity(k, v, Dim::Scalar)?,
            "min_distance" => c.min_distance = quantity(k, v, Dim::Distance)?,
            "reference_distance" => c.reference_distance = quantity(k, v, Dim::Distance)?,
            "rb_enb" => c.rb_enb = count(k, v)?,
            "rb_coordinator" => c.rb_coordinator = count(k, v)?,
            "rb_backhaul" => c.rb_backhaul = count(k, v)?,
            "access_bandwidth" => c.access_bandwidth = quantity(k, v, Dim::Frequency)?,
            "backhaul_bandwidth" => c.backhaul_bandwidth = quantity(k, v, Dim::Frequency)?,
            "tx_power" => c.tx_power = quantity(k, v, Dim::Power)?,
            "sense_power" => c.sense_power = quantity(k, v, Dim::Power)?,
            "noise" => c.noise = quantity(k, v, Dim::Power)?,
            "backhaul_noise" => c.backhaul_noise = quantity(k, v, Dim::Power)?,
            "busy_interferers" => c.busy_interferers = count(k, v)?,
            "busy_interferer_gain" => c.busy_interferer_gain = quantity(k, v, Dim::Scalar)?,
            "contention" => c.contention = flag(k, v)?,
            "packet_size" => c.packet_size = quantity(k, v, Dim::Data)?,
            "task_input" => c.task_input = quantity(k, v, Dim::Data)?,
            "task_cycles" => c.task_cycles = quantity(k, v, Dim::Cycles)?,
            "cpu_local" => c.cpu_local = quantity(k, v, Dim::Frequency)?,
            "cpu_coordinator" => c.cpu_coordinator = quantity(k, v, Dim::Frequency)?,
            "cpu_mec" => c.cpu_mec = quantity(k, v, Dim::Frequency)?,
            "cycle_energy_coeff" => {
                c.cycle_energy_coeff = if v.is_null() {
                    None
                } else {
                    Some(quantity(k, v, Dim::Energy)?)
                }
            }
            "sense_time" => c.sense_time = quantity(k, v, Dim::Time)?,
            "zeta" => c.zeta = quantity(k, v, Dim::Scalar)?,
            "eta" => c.eta = quantity(k, v, Dim::Scalar)?,
            "coordinator_backhaul_hop" => c.coordinator_backhaul_hop = flag(k, v)?,
            "p_stay_idle" => c.p_stay_idle = quantity(k, v, Dim::Scalar)?,
            "p_idle_to_busy" => c.p_idle_to_busy = quantity(k, v, Dim::Scalar)?,
            "p_busy_to_idle" => c.p_busy_to_idle = quantity(k, v, Dim::Scalar)?,
            "p_stay_busy" => c.p_stay_busy = quantity(k, v, Dim::Scalar)?,
            "false_obs_sensed" => c.false_obs_sensed = quantity(k, v, Dim::Scalar)?,
            "false_obs_unsensed" => c.false_obs_unsensed = quantity(k, v, Dim::Scalar)?,
            "sensing_model" => c.sensing_model = named(k, v)?,
            "slots_per_frame" => c.slots_per_frame = count(k, v)?,
            "frames" => c.frames = count(k, v)?,
            "mtc_count" => c.mtc_count = count(k, v)?,
            "reset_rb_each_frame" => c.reset_rb_each_frame = flag(k, v)?,
            "task_arrival" => c.task_arrival = named(k, v)?,
            "grid_step" => c.grid_step = quantity(k, v, Dim::Scalar)?,
            "horizon" => c.horizon = if v.is_null() { None } else { Some(count(k, v)?) },
            "solver_mode" => c.solver_mode = named(k, v)?,
            "sweep_cycles" => c.sweep_cycles = list(k, v, |k, v| quantity(k, v, Dim::Cycles))?,
            "sweep_mtcs" => c.sweep_mtcs = list(k, v, count)?,
            "policies" => c.policies = named(k, v)?,
            "seed" => {
                c.seed = v
                    .as_u64()
                    .ok_or_else(|| Error::config(k, "expected an unsigned 64-bit integer"))?
            }
            "output_dir" => {
                c.output_dir = v
                    .as_str()
                    .ok_or_else(|| Error::config(k, "expected a string"))?
                    .to_string()
            }
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    Ok(c)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("inp_count", self.inp_count),
            ("total_devices", self.total_devices),
            ("virtual_networks", self.virtual_networks),
            ("slots_per_frame", self.slots_per_frame),
            ("frames", self.frames),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.virtual_networks > self.total_devices {
            return Err(Error::config("virtual_networks", "more slices than devices"));
        }
        if self.focus_network >= self.virtual_networks {
            return Err(Error::config("focus_network", "no such virtual network"));
        }
        if self.rb_enb + self.rb_coordinator == 0 {
            return Err(Error::config("rb_enb", "a slice needs at least one access RB"));
        }
        if self.mtc_count >= self.total_devices {
            return Err(Error::config(
                "mtc_count",
                "needs a coordinator besides the active devices",
            ));
        }
        if let Some(&m) = self.sweep_mtcs.iter().find(|&&m| m >= self.total_devices) {
            return Err(Error::config(
                "sweep_mtcs",
                format!("{m} active devices exceed the device population"),
            ));
        }
        for (key, v) in [
            ("radius", self.radius),
            ("access_bandwidth", self.access_bandwidth),
            ("backhaul_bandwidth", self.backhaul_bandwidth),
            ("tx_power", self.tx_power),
            ("noise", self.noise),
            ("backhaul_noise", self.backhaul_noise),
            ("packet_size", self.packet_size),
            ("task_input", self.task_input),
            ("task_cycles", self.task_cycles),
            ("cpu_local", self.cpu_local),
            ("cpu_coordinator", self.cpu_coordinator),
            ("cpu_mec", self.cpu_mec),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        for (key, v) in [
            ("sense_power", self.sense_power),
            ("busy_interferer_gain", self.busy_interferer_gain),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(key, format!("must be nonnegative, got {v}")));
            }
        }
        if self.sweep_cycles.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::config("sweep_cycles", "cycle counts must be positive"));
        }
        if self.horizon == Some(0) {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::config("grid_step", "must lie in (0, 0.5]"));
        }
        self.propagation().validate()?;
        self.weights().validate()?;
        self.rb_process().validate()?;
        Ok(())
    }

    pub fn rb_count(&self) -> usize {
        self.rb_enb + self.rb_coordinator
    }

    pub fn propagation(&self) -> PropagationModel {
        PropagationModel {
            exponent: self.pathloss_exponent,
            min_distance: self.min_distance,
            reference_distance: self.reference_distance,
        }
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights {
            zeta: self.zeta,
            eta: self.eta,
            sense_time: self.sense_time,
            cycle_energy_coeff: self
                .cycle_energy_coeff
                .unwrap_or_else(|| cycle_energy_coeff(self.cpu_local)),
        }
    }

    pub fn task(&self) -> ComputingTask {
        ComputingTask {
            input_bits: self.task_input,
            cycles: self.task_cycles,
        }
    }

    pub fn rb_process(&self) -> RbProcess {
        RbProcess {
            p_stay_idle: self.p_stay_idle,
            p_idle_to_busy: self.p_idle_to_busy,
            p_busy_to_idle: self.p_busy_to_idle,
            p_stay_busy: self.p_stay_busy,
            false_obs_sensed: self.false_obs_sensed,
            false_obs_unsensed: self.false_obs_unsensed,
            sensing: self.sensing_model,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            horizon: self.horizon.unwrap_or(self.slots_per_frame),
            grid_step: self.grid_step,
            mode: self.solver_mode,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies the seed and output-directory environment overrides.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(s) = lookup(ENV_SEED) {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::config(ENV_SEED, format!("not a u64: `{s}`")))?;
        }
        if let Some(dir) = lookup(ENV_OUT_DIR) {
            self.output_dir = dir;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_reference_values() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(parse_config("{}").unwrap(), c);
        assert_eq!(
            (c.inp_count, c.total_devices, c.virtual_networks, c.rb_count()),
            (3, 50, 5, 5)
        );
        assert_eq!((c.access_bandwidth, c.backhaul_bandwidth), (5e6, 10e6));
        assert_eq!((c.tx_power, c.noise), (0.1, 0.001));
        assert_eq!(c.packet_size, 2.0 * 8.0 * 1048576.0);
        assert_eq!(c.task_input, 3_440_640.0);
        assert_eq!(c.task_cycles, 1e9);
        assert_eq!((c.cpu_local, c.cpu_coordinator, c.cpu_mec), (0.5e9, 1e9, 1e11));
        assert_eq!(
            (c.p_stay_idle, c.p_stay_busy, c.p_busy_to_idle, c.p_idle_to_busy),
            (0.8, 0.15, 0.85, 0.2)
        );
        assert_eq!((c.false_obs_sensed, c.false_obs_unsensed), (0.1, 0.1));
        assert_eq!(c.slots_per_frame, 100);
        assert_eq!(c.radius, 1000.0);
        assert_eq!(c.weights().cycle_energy_coeff, 2.5e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = parse_config(r#"{"zeta": 0.7, "eta": 0.2}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "zeta"));
    }

    #[test]
    fn unit_suffixes() {
        let c = parse_config(
            r#"{"tx_power": "100 mW", "access_bandwidth": "5 MHz", "task_input": "420 KB",
                "task_cycles": "1000 Megacycles", "cpu_local": "0.5 GHz", "packet_size": "2 MB",
                "sense_time": "1 ms", "radius": "1 km", "noise": "0 dBm"}"#,
        )
        .unwrap();
        assert_eq!(c.tx_power, 0.1);
        assert_eq!(c.access_bandwidth, 5e6);
        assert_eq!(c.task_input, 3_440_640.0);
        assert_eq!(c.task_cycles, 1e9);
        assert_eq!(c.cpu_local, 0.5e9);
        assert_eq!(c.packet_size, 16_777_216.0);
        assert_eq!(c.sense_time, 1e-3);
        assert_eq!(c.radius, 1000.0);
        assert!((c.noise - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn errors_name_the_key() {
        for (doc, key) in [
            (r#"{"bogus": 1}"#, "bogus"),
            (r#"{"tx_power": "100 parsecs"}"#, "tx_power"),
            (r#"{"tx_power": -1}"#, "tx_power"),
            (r#"{"frames": 0}"#, "frames"),
            (r#"{"p_stay_idle": 0.5}"#, "p_idle_to_busy"),
            (r#"{"policies": ["greedy"]}"#, "policies"),
            (r#"{"grid_step": 0.9}"#, "grid_step"),
        ] {
            match parse_config(doc) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
        assert!(matches!(parse_config("{not json"), Err(Error::Json(_))));
        assert!(matches!(parse_config("[1, 2]"), Err(Error::Config { .. })));
    }

    #[test]
    fn env_overrides() {
        let mut c = RunConfig::default();
        c.apply_env(|k| match k {
            ENV_SEED => Some("77".into()),
            ENV_OUT_DIR => Some("/tmp/x".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((c.seed, c.output_dir.as_str()), (77, "/tmp/x"));
        assert!(c.apply_env(|_| Some("nope".into())).is_err());
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            zeta in 0.0f64..=1.0,
            tx in 1e-3f64..1.0,
            stay in 0.0f64..=1.0,
            back in 0.0f64..=1.0,
            nu in 0.0f64..0.5,
            seed: u64,
            frames in 1usize..50,
            hop: bool,
            coeff in proptest::option::of(1e-13f64..1e-10),
            horizon in proptest::option::of(1usize..200),
        ) {
            let c = RunConfig {
                zeta,
                eta: 1.0 - zeta,
                tx_power: tx,
                p_stay_idle: stay,
                p_idle_to_busy: 1.0 - stay,
                p_busy_to_idle: back,
                p_stay_busy: 1.0 - back,
                false_obs_sensed: nu,
                seed,
                frames,
                coordinator_backhaul_hop: hop,
                cycle_energy_coeff: coeff,
                horizon,
                ..RunConfig::default()
            };
            prop_assume!(c.validate().is_ok());
            prop_assert_eq!(parse_config(&c.to_json()).unwrap(), c);
        }
    }
}
