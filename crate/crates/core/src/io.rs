//! CSV output of sweep results and slot traces.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::RbState;
use crate::pomdp::{AccessTarget, ComputeNode};
use crate::sim::{ResultRow, SlotTrace};

pub const RESULT_HEADER: [&str; 7] = [
    "axis",
    "policy",
    "frame",
    "mean_cost",
    "total_cost",
    "mean_time_s",
    "mean_energy_j",
];

pub const TRACE_HEADER: [&str; 11] = [
    "frame",
    "slot",
    "mtc_id",
    "action_sense",
    "action_access",
    "action_compute",
    "obs",
    "rb_truth_bitmask",
    "exec_time_s",
    "energy_j",
    "cost",
];

/// Shortest exact-enough text for a float: scientific with 17 significant
/// digits, which round-trips every f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(File::create(path)?)
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            format_float(r.axis),
            r.policy.name().to_string(),
            r.frame.to_string(),
            format_float(r.mean_cost),
            format_float(r.total_cost),
            format_float(r.mean_time_s),
            format_float(r.mean_energy_j),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes sweep rows to `path`, creating parent directories.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::config("sweep", "no result rows to write"));
    }
    write_results(rows, create(path)?)
}

fn state_name(s: RbState) -> &'static str {
    match s {
        RbState::Idle => "idle",
        RbState::Busy => "busy",
    }
}

pub fn write_traces<W: Write>(traces: &[SlotTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for t in traces {
        let access = match t.action.access {
            None => "none",
            Some(AccessTarget::Enb) => "enb",
            Some(AccessTarget::Coordinator) => "coord",
        };
        let compute = match t.action.compute {
            ComputeNode::Local => "local",
            ComputeNode::Mec => "mec",
            ComputeNode::Coordinator => "coord",
        };
        w.write_record([
            t.frame.to_string(),
            t.slot.to_string(),
            t.mtc_id.to_string(),
            t.action.sense.map_or_else(|| "none".to_string(), |r| r.to_string()),
            access.to_string(),
            compute.to_string(),
            t.observation.map_or("none", state_name).to_string(),
            t.rb_truth.to_string(),
            format_float(t.costs.exec_time),
            format_float(t.costs.energy),
            format_float(t.costs.scalar_cost),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_traces(traces: &[SlotTrace], path: &Path) -> Result<()> {
    write_traces(traces, create(path)?)
}
