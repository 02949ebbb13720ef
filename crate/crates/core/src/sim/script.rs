//! Host programming scripts: timed bus writes, per-slave busy windows and
//! module swaps.

use crate::spec::{int, parse_json, validate, ParseError, RegisterMapSpec, SettingSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramScript {
    #[serde(default)]
    pub writes: Vec<ScriptWrite>,
    #[serde(default)]
    pub busy_windows: Vec<BusyWindow>,
    #[serde(default)]
    pub swaps: Vec<SwapEvent>,
}

/// A host write that becomes eligible at configuration cycle `at_cycle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptWrite {
    #[serde(with = "int")]
    pub at_cycle: u64,
    #[serde(with = "int")]
    pub addr: u64,
    #[serde(with = "int")]
    pub data: u64,
}

/// Interval `[start_ps, end_ps)` during which a slave's logic asks to operate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusyWindow {
    pub slave: String,
    #[serde(with = "int")]
    pub start_ps: u64,
    #[serde(with = "int")]
    pub end_ps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapEvent {
    #[serde(with = "int")]
    pub at_ps: u64,
    pub slave: String,
    pub new_spec_fragment: SlaveFragment,
}

/// Replacement contents for a reconfigurable slave. The slave keeps its name
/// and its slot (base address) in the interconnect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaveFragment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_domain: Option<String>,
    #[serde(default)]
    pub registers: Vec<SettingSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("{0}: unknown slave `{1}`")]
    UnknownSlave(String, String),
    #[error("busy_windows[{0}]: end_ps precedes start_ps")]
    InvertedWindow(usize),
    #[error("swaps[{index}]: fragment does not fit the map:\n{report}")]
    BadFragment { index: usize, report: String },
}

pub fn parse_script(text: &str) -> Result<ProgramScript, ParseError> {
    parse_json(text)
}

/// `spec` with one slave's contents replaced by `fragment`.
pub fn apply_fragment(spec: &RegisterMapSpec, slave: usize, fragment: &SlaveFragment) -> RegisterMapSpec {
    let mut next = spec.clone();
    let s = &mut next.slaves[slave];
    if let Some(d) = &fragment.clock_domain {
        s.clock_domain = d.clone();
    }
    s.registers = fragment.registers.clone();
    next
}

impl ProgramScript {
    /// Check every reference in the script against `spec`. Swaps are applied
    /// in time order, so each fragment is checked against the map as it will
    /// be when the swap happens.
    pub fn validate(&self, spec: &RegisterMapSpec) -> Result<(), ScriptError> {
        for (i, w) in self.busy_windows.iter().enumerate() {
            if spec.slave_index(&w.slave).is_none() {
                return Err(ScriptError::UnknownSlave(format!("busy_windows[{i}]"), w.slave.clone()));
            }
            if w.end_ps < w.start_ps {
                return Err(ScriptError::InvertedWindow(i));
            }
        }
        let mut order: Vec<usize> = (0..self.swaps.len()).collect();
        order.sort_by_key(|&i| self.swaps[i].at_ps);
        let mut current = spec.clone();
        for i in order {
            let swap = &self.swaps[i];
            let Some(si) = current.slave_index(&swap.slave) else {
                return Err(ScriptError::UnknownSlave(format!("swaps[{i}]"), swap.slave.clone()));
            };
            let next = apply_fragment(&current, si, &swap.new_spec_fragment);
            let report = validate(&next);
            if !report.is_empty() {
                return Err(ScriptError::BadFragment {
                    index: i,
                    report: report.to_string(),
                });
            }
            current = next;
        }
        Ok(())
    }
}
