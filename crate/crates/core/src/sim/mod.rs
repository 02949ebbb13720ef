//! Multi-clock, cycle-accurate simulation of a distributed configuration bus.
//!
//! Time advances from clock edge to clock edge. Domain `d` has edges at
//! `n * period_ps` for `n >= 1`. The first clock domain of the spec clocks
//! the configuration bus; every slave's functional logic runs on its own
//! domain. Each edge is evaluated in two phases: all next-state values are
//! computed from pre-edge state, then committed. Edges that coincide are
//! evaluated together and their events logged in domain-index order.
//!
//! Per slave the model holds
//!
//! * the configuration block (settings words and the registered Ready),
//! * `busy_q`, the busy request registered in the slave's domain,
//! * a `sync_length`-stage synchronizer carrying `busy_q` into the
//!   configuration domain, whose last stage drives the block's busy input.
//!
//! Slave logic only operates once it has seen Ready drop. At the first
//! slave-domain edge of such an episode it samples every settings word,
//! logged as `value_sampled`.

mod coherence;
mod script;
mod trace;

pub use coherence::{check_coherence, Violation};
pub use script::{apply_fragment, parse_script, BusyWindow, ProgramScript, ScriptError, ScriptWrite, SlaveFragment, SwapEvent};
pub use trace::{InitialWord, Trace, TraceEvent, TraceKind, ViolationKind};

use crate::elaborate::{elaborate, DesignModel, ElaborateError};
use crate::protocol::{BusMaster, BusSignals, Decoder, MasterEvent, SlaveConfigBlock};
use crate::spec::{validate, RegisterMapSpec, Topology};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimConfig {
    /// Disable Ready gating in both master and slaves. Exists only to show
    /// that the coherence checker catches the hazard gating prevents.
    pub fault_mode: bool,
    /// Give up on a write after this many configuration cycles of waiting.
    pub timeout_cycles: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapRefusal {
    /// A held transaction addresses the slave.
    InFlight,
    /// The slave's Ready is low; its logic may be operating.
    NotReady,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("the simulator models the distributed bus only, not {0}")]
    UnsupportedTopology(Topology),
    #[error("spec is invalid:\n{0}")]
    InvalidSpec(String),
    #[error("model was not elaborated from this spec")]
    ModelMismatch,
    #[error(transparent)]
    Elaborate(#[from] ElaborateError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("unknown slave `{0}`")]
    UnknownSlave(String),
    #[error("slave {slave} has no settings word at offset {offset:#x}")]
    UnknownAddress { slave: usize, offset: u64 },
    #[error("swap of slave {slave} refused: {reason:?}")]
    SwapRefused { slave: usize, reason: SwapRefusal },
}

#[derive(Debug, Clone)]
struct SlaveState {
    block: SlaveConfigBlock,
    domain: usize,
    busy_q: bool,
    sync: Vec<bool>,
    /// Already sampled during the current busy episode.
    sampled: bool,
    /// Merged, sorted busy windows and a cursor past the finished ones.
    windows: Vec<(u64, u64)>,
    cursor: usize,
}

impl SlaveState {
    fn new(spec: &RegisterMapSpec, index: usize, sync_length: u32) -> Self {
        SlaveState {
            block: SlaveConfigBlock::at_reset(spec, index),
            domain: spec.domain_index(&spec.slaves[index].clock_domain).expect("validated domain"),
            busy_q: false,
            sync: vec![false; sync_length as usize],
            sampled: false,
            windows: Vec::new(),
            cursor: 0,
        }
    }

    fn busy_request(&mut self, t: u64) -> bool {
        while self.cursor < self.windows.len() && self.windows[self.cursor].1 <= t {
            self.cursor += 1;
        }
        self.windows.get(self.cursor).is_some_and(|&(s, _)| s <= t)
    }

    fn quiet(&self) -> bool {
        !self.busy_q && self.sync.iter().all(|b| !b) && self.block.ready_state
    }

    fn hash_into(&self, out: &mut String) {
        use std::fmt::Write;
        for (off, w) in &self.block.local_memory {
            let _ = write!(out, "{off}:{}/{};", w.value, w.width);
        }
        let _ = write!(
            out,
            "r{} b{} q{} s{:?} d{}|",
            self.block.ready_state as u8, self.block.busy_input as u8, self.busy_q as u8, self.sync, self.domain
        );
    }
}

/// Simulation state: spec and model in force, clocks, master, slaves, the
/// remaining script and the trace.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: RegisterMapSpec,
    model: DesignModel,
    config: SimConfig,
    decoder: Decoder,
    periods: Vec<u64>,
    next_edge: Vec<u64>,
    time_ps: u64,
    master: BusMaster,
    slaves: Vec<SlaveState>,
    writes: VecDeque<ScriptWrite>,
    swaps: VecDeque<SwapEvent>,
    last_busy_end: u64,
    timed_out: bool,
    trace: Trace,
}

/// Build a simulator for `model`, which must be the elaboration of `spec`.
pub fn build_sim(model: &DesignModel, spec: &RegisterMapSpec, config: SimConfig) -> Result<Simulator, SimError> {
    let sim = Simulator::new(spec, config)?;
    if sim.model != *model {
        return Err(SimError::ModelMismatch);
    }
    Ok(sim)
}

impl Simulator {
    pub fn new(spec: &RegisterMapSpec, config: SimConfig) -> Result<Self, SimError> {
        let topology = spec.architecture.topology;
        if topology != Topology::Distributed {
            return Err(SimError::UnsupportedTopology(topology));
        }
        let report = validate(spec);
        if !report.is_empty() {
            return Err(SimError::InvalidSpec(report.to_string()));
        }
        let model = elaborate(spec)?;
        let periods: Vec<u64> = spec.clock_domains.iter().map(|d| d.period_ps).collect();
        let sync_length = spec.architecture.sync_length;
        let slaves = (0..spec.slaves.len()).map(|i| SlaveState::new(spec, i, sync_length)).collect();
        let mut master = BusMaster::new(config.timeout_cycles);
        master.set_gating(!config.fault_mode);
        let mut sim = Simulator {
            decoder: Decoder::new(spec),
            next_edge: periods.clone(),
            periods,
            spec: spec.clone(),
            model,
            config,
            time_ps: 0,
            master,
            slaves,
            writes: VecDeque::new(),
            swaps: VecDeque::new(),
            last_busy_end: 0,
            timed_out: false,
            trace: Trace::default(),
        };
        sim.trace.initial = sim.image();
        Ok(sim)
    }

    /// Every settings word as `(slave, absolute address, value)`.
    fn image(&self) -> Vec<InitialWord> {
        let mut out = Vec::new();
        for (i, s) in self.slaves.iter().enumerate() {
            let base = self.spec.slaves[i].base_addr;
            for (off, w) in &s.block.local_memory {
                out.push((i, base + off, w.value));
            }
        }
        out
    }

    pub fn spec(&self) -> &RegisterMapSpec {
        &self.spec
    }

    pub fn model(&self) -> &DesignModel {
        &self.model
    }

    pub fn time_ps(&self) -> u64 {
        self.time_ps
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// A write was abandoned because its slave never became Ready.
    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    pub fn ready(&self, slave: usize) -> bool {
        self.slaves[slave].block.ready_state
    }

    /// Current stored word; does not disturb the simulation.
    pub fn backdoor_read(&self, slave: usize, offset: u64) -> Result<u64, SimError> {
        self.slaves
            .get(slave)
            .and_then(|s| s.block.read(offset))
            .ok_or(SimError::UnknownAddress { slave, offset })
    }

    pub fn slave_state_hash(&self, slave: usize) -> String {
        let mut s = String::new();
        self.slaves[slave].hash_into(&mut s);
        crate::sha256_hex(s.as_bytes())
    }

    pub fn state_hash(&self) -> String {
        let mut s = format!("t{} c{} p{} i{}|", self.time_ps, self.master.cycle(), self.master.pending(), self.master.in_flight().is_some());
        for slave in &self.slaves {
            slave.hash_into(&mut s);
        }
        crate::sha256_hex(s.as_bytes())
    }

    /// Queue a script's writes, busy windows and swaps. Write cycles count
    /// configuration-clock edges from time zero; edge `k` happens at
    /// `(k + 1) * period`.
    pub fn load(&mut self, script: &ProgramScript) -> Result<(), SimError> {
        script.validate(&self.spec)?;
        let mut writes: Vec<ScriptWrite> = self.writes.drain(..).chain(script.writes.iter().copied()).collect();
        writes.sort_by_key(|w| w.at_cycle);
        self.writes = writes.into();

        let mut swaps: Vec<SwapEvent> = self.swaps.drain(..).chain(script.swaps.iter().cloned()).collect();
        swaps.sort_by_key(|s| s.at_ps);
        self.swaps = swaps.into();

        let mut per_slave: Vec<Vec<(u64, u64)>> = vec![Vec::new(); self.slaves.len()];
        for w in &script.busy_windows {
            let i = self.spec.slave_index(&w.slave).expect("validated");
            if w.end_ps > w.start_ps {
                per_slave[i].push((w.start_ps, w.end_ps));
            }
            self.last_busy_end = self.last_busy_end.max(w.end_ps);
        }
        for (s, mut add) in self.slaves.iter_mut().zip(per_slave) {
            add.extend_from_slice(&s.windows[s.cursor..]);
            add.sort_unstable();
            let mut merged: Vec<(u64, u64)> = Vec::with_capacity(add.len());
            for (a, b) in add {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            s.windows = merged;
            s.cursor = 0;
        }
        Ok(())
    }

    /// Load `script` and simulate every edge up to and including `until_ps`.
    pub fn run(&mut self, script: &ProgramScript, until_ps: u64) -> Result<(), SimError> {
        self.load(script)?;
        while self.next_time().is_some_and(|t| t <= until_ps) {
            self.step();
        }
        Ok(())
    }

    /// Simulate until every loaded write and swap has been handled and all
    /// busy windows are over. Returns `false` if `max_ps` came first.
    pub fn run_until_idle(&mut self, max_ps: u64) -> bool {
        loop {
            if self.is_idle() {
                return true;
            }
            match self.next_time() {
                Some(t) if t <= max_ps => self.step(),
                _ => return false,
            }
        }
    }

    fn is_idle(&self) -> bool {
        self.writes.is_empty()
            && self.swaps.is_empty()
            && self.master.is_idle()
            && self.time_ps >= self.last_busy_end
            && self.slaves.iter().all(SlaveState::quiet)
    }

    fn next_time(&self) -> Option<u64> {
        let edge = self.next_edge.iter().copied().min();
        let swap = self.swaps.front().map(|s| s.at_ps.max(self.time_ps + 1));
        match (edge, swap) {
            (Some(e), Some(s)) => Some(e.min(s)),
            (e, s) => e.or(s),
        }
    }

    fn log(&mut self, kind: TraceKind, slave: Option<usize>, addr: Option<u64>, data: Option<u64>) {
        self.trace.events.push(TraceEvent {
            time_ps: self.time_ps,
            kind,
            slave,
            addr,
            data,
        });
    }

    /// Advance to the next point in time where anything happens.
    pub fn step(&mut self) {
        let Some(t) = self.next_time() else { return };
        self.time_ps = t;

        while self.swaps.front().is_some_and(|s| s.at_ps <= t) {
            let swap = self.swaps.pop_front().expect("front exists");
            let slave = self.spec.slave_index(&swap.slave).expect("validated");
            let at = self.time_ps;
            self.time_ps = swap.at_ps.max(self.trace.events.last().map_or(0, |e| e.time_ps));
            // a refusal is already in the trace as a violation
            let _ = self.swap_module(slave, &swap.new_spec_fragment);
            self.time_ps = at;
        }

        let firing: Vec<bool> = self.next_edge.iter().map(|&e| e == t).collect();
        if !firing.iter().any(|&f| f) {
            return;
        }

        // Phase 1: slave-domain edges, computed from pre-edge state.
        let mut sampled: Vec<usize> = Vec::new();
        let mut next_busy: Vec<Option<bool>> = vec![None; self.slaves.len()];
        for (i, s) in self.slaves.iter_mut().enumerate() {
            if !firing[s.domain] {
                continue;
            }
            if s.busy_q && !s.block.ready_state {
                if !s.sampled {
                    sampled.push(i);
                    s.sampled = true;
                }
            } else if !s.busy_q {
                s.sampled = false;
            }
            next_busy[i] = Some(s.busy_request(t));
        }
        let samples: Vec<(usize, Vec<(u64, u64)>)> = sampled
            .iter()
            .map(|&i| {
                let base = self.spec.slaves[i].base_addr;
                let words = self.slaves[i].block.local_memory.iter().map(|(o, w)| (base + o, w.value)).collect();
                (i, words)
            })
            .collect();

        // Phase 1 and 2 of the configuration domain.
        if firing[0] {
            self.config_edge();
        }

        // Commit slave-domain registers and log their events by domain.
        for (i, b) in next_busy.iter().enumerate() {
            if let Some(b) = b {
                self.slaves[i].busy_q = *b;
            }
        }
        let mut by_domain: Vec<_> =
            samples.into_iter().map(|(i, w)| (self.slaves[i].domain, i, w)).collect();
        by_domain.sort_by_key(|(d, i, _)| (*d, *i));
        for (_, i, words) in by_domain {
            for (addr, value) in words {
                self.log(TraceKind::ValueSampled, Some(i), Some(addr), Some(value));
            }
        }

        for (d, f) in firing.iter().enumerate() {
            if *f {
                self.next_edge[d] += self.periods[d];
            }
        }
    }

    fn config_edge(&mut self) {
        let cycle = self.master.cycle();
        while self.writes.front().is_some_and(|w| w.at_cycle <= cycle) {
            let w = self.writes.pop_front().expect("front exists");
            self.master.push(w.addr, w.data);
        }

        let ready: Vec<bool> = self.slaves.iter().map(|s| s.block.ready_state).collect();
        let out = self.master.step(&self.decoder, &ready);
        for e in out.events {
            match e {
                MasterEvent::Issued(tx) => {
                    let slave = self.decoder.decode(tx.addr).map(|h| h.slave);
                    self.log(TraceKind::WriteIssued, slave, Some(tx.addr), Some(tx.data));
                }
                MasterEvent::Accepted { tx, slave, .. } => {
                    self.log(TraceKind::WriteAccepted, Some(slave), Some(tx.addr), Some(tx.data));
                }
                MasterEvent::Unmapped(tx) => {
                    self.log(TraceKind::Violation, None, Some(tx.addr), Some(ViolationKind::UnmappedWrite.code()));
                }
                MasterEvent::TimedOut { tx, slave } => {
                    self.timed_out = true;
                    self.log(TraceKind::Violation, Some(slave), Some(tx.addr), Some(ViolationKind::WriteTimeout.code()));
                }
            }
        }

        // A write only lands in the cycle the master accepts it.
        let signals = if out.signals.cfg_write && self.master.in_flight().is_none() {
            out.signals
        } else {
            BusSignals::idle()
        };
        let gate = !self.config.fault_mode;
        for i in 0..self.slaves.len() {
            let s = &mut self.slaves[i];
            s.block.busy_input = s.sync.last().copied().unwrap_or(s.busy_q);
            let step = s.block.step_gated(&signals, i, gate);
            if !s.sync.is_empty() {
                s.sync.rotate_right(1);
                s.sync[0] = s.busy_q;
            }
            if let Some((offset, value)) = step.written {
                let addr = self.spec.slaves[i].base_addr + offset;
                self.log(TraceKind::ConfigChanged, Some(i), Some(addr), Some(value));
            }
            if let Some(r) = step.ready_changed {
                self.log(TraceKind::ReadyChanged, Some(i), None, Some(r as u64));
            }
        }
    }

    /// Replace a slave's contents. Refused, with a `swap_refused` violation
    /// in the trace, while a transaction to the slave is held on the bus or
    /// while its Ready is low.
    pub fn swap_module(&mut self, slave: usize, fragment: &SlaveFragment) -> Result<(), SimError> {
        if slave >= self.slaves.len() {
            return Err(SimError::UnknownSlave(slave.to_string()));
        }
        let reason = if self.master.in_flight().is_some_and(|(_, hit)| hit.slave == slave) {
            Some(SwapRefusal::InFlight)
        } else if !self.slaves[slave].block.ready_state {
            Some(SwapRefusal::NotReady)
        } else {
            None
        };
        if let Some(reason) = reason {
            self.log(TraceKind::Violation, Some(slave), None, Some(ViolationKind::SwapRefused.code()));
            return Err(SimError::SwapRefused { slave, reason });
        }

        let next = apply_fragment(&self.spec, slave, fragment);
        let report = validate(&next);
        if !report.is_empty() {
            return Err(ScriptError::BadFragment {
                index: 0,
                report: report.to_string(),
            }
            .into());
        }
        self.model = elaborate(&next)?;
        self.decoder = Decoder::new(&next);
        self.spec = next;

        let old = &self.slaves[slave];
        let mut fresh = SlaveState::new(&self.spec, slave, self.spec.architecture.sync_length);
        fresh.windows = old.windows.clone();
        fresh.cursor = old.cursor;
        self.slaves[slave] = fresh;

        self.log(TraceKind::SwapPerformed, Some(slave), None, None);
        let base = self.spec.slaves[slave].base_addr;
        let words: Vec<(u64, u64)> = self.slaves[slave].block.local_memory.iter().map(|(o, w)| (base + o, w.value)).collect();
        for (addr, value) in words {
            self.log(TraceKind::ConfigChanged, Some(slave), Some(addr), Some(value));
        }
        Ok(())
    }
}

/// Count of problems in a finished run: checker findings plus violations
/// the simulator logged itself (timeouts, unmapped writes, refused swaps).
pub fn violation_count(trace: &Trace) -> usize {
    check_coherence(trace).len() + trace.violations().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    pub(crate) fn two_domain_spec() -> RegisterMapSpec {
        parse_spec(
            r#"{"name": "t", "bus": {"data_width": 16, "addr_width": 8, "slave_select_bits": 2},
                "clock_domains": [{"name": "cfg", "period_ps": 10000}, {"name": "fast", "period_ps": 7000}],
                "slaves": [
                  {"name": "a", "clock_domain": "fast", "base_addr": 0, "registers": [
                    {"name": "x", "offset": 0, "width": 16, "reset_value": "0xA5"},
                    {"name": "y", "offset": 1, "width": 4}]},
                  {"name": "b", "clock_domain": "cfg", "base_addr": "0x40", "registers": [
                    {"name": "z", "offset": 0, "width": 8, "reset_value": 7}]}],
                "architecture": {"topology": "distributed", "sync_length": 2}}"#,
        )
        .unwrap()
    }

    fn write(at_cycle: u64, addr: u64, data: u64) -> ScriptWrite {
        ScriptWrite { at_cycle, addr, data }
    }

    #[test]
    fn reset_and_schedule() {
        let spec = two_domain_spec();
        let model = elaborate(&spec).unwrap();
        let mut sim = build_sim(&model, &spec, SimConfig::default()).unwrap();
        assert_eq!(sim.backdoor_read(0, 0).unwrap(), 0xA5);
        assert_eq!(sim.backdoor_read(1, 0).unwrap(), 7);
        assert!(matches!(sim.backdoor_read(0, 5), Err(SimError::UnknownAddress { .. })));
        assert!(sim.trace().events.is_empty());

        let mut times = Vec::new();
        for _ in 0..4 {
            sim.step();
            times.push(sim.time_ps());
        }
        assert_eq!(times, vec![7000, 10000, 14000, 20000]);

        let again = Simulator::new(&spec, SimConfig::default()).unwrap();
        assert_eq!(again.state_hash(), Simulator::new(&spec, SimConfig::default()).unwrap().state_hash());
    }

    #[test]
    fn global_unsupported() {
        let mut spec = two_domain_spec();
        spec.architecture.topology = Topology::Global;
        assert!(matches!(Simulator::new(&spec, SimConfig::default()), Err(SimError::UnsupportedTopology(_))));
    }

    #[test]
    fn write_waits_for_busy_window() {
        let spec = two_domain_spec();
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        let script = ProgramScript {
            writes: vec![write(10, 0x00, 0xDEAD)],
            busy_windows: vec![BusyWindow {
                slave: "a".into(),
                start_ps: 0,
                end_ps: 300_000,
            }],
            swaps: vec![],
        };
        sim.run(&script, 1_000_000).unwrap();
        let accepted = sim.trace().of_kind(TraceKind::WriteAccepted).next().unwrap();
        assert!(accepted.time_ps >= 300_000, "{accepted:?}");
        assert_eq!(sim.backdoor_read(0, 0).unwrap(), 0xDEAD);
        assert!(check_coherence(sim.trace()).is_empty());
        assert_eq!(sim.trace().of_kind(TraceKind::ValueSampled).count(), 2);
    }

    #[test]
    fn empty_script_leaves_state() {
        let spec = two_domain_spec();
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        sim.run(&ProgramScript::default(), 500_000).unwrap();
        assert!(sim.trace().events.is_empty());
        assert_eq!(sim.backdoor_read(0, 0).unwrap(), 0xA5);
    }

    #[test]
    fn fault_mode_is_caught() {
        let spec = two_domain_spec();
        let cfg = SimConfig {
            fault_mode: true,
            timeout_cycles: None,
        };
        let mut sim = Simulator::new(&spec, cfg).unwrap();
        let script = ProgramScript {
            writes: vec![write(20, 0x01, 3)],
            busy_windows: vec![BusyWindow {
                slave: "a".into(),
                start_ps: 0,
                end_ps: 400_000,
            }],
            swaps: vec![],
        };
        sim.run(&script, 1_000_000).unwrap();
        let v = check_coherence(sim.trace());
        assert!(v.iter().any(|v| v.kind == ViolationKind::ConfigChangedWhileBusy));
    }

    #[test]
    fn timeout_is_reported() {
        let spec = two_domain_spec();
        let cfg = SimConfig {
            fault_mode: false,
            timeout_cycles: Some(10),
        };
        let mut sim = Simulator::new(&spec, cfg).unwrap();
        let script = ProgramScript {
            writes: vec![write(20, 0x00, 1)],
            busy_windows: vec![BusyWindow {
                slave: "a".into(),
                start_ps: 0,
                end_ps: 10_000_000,
            }],
            swaps: vec![],
        };
        sim.run(&script, 2_000_000).unwrap();
        assert!(sim.timed_out());
        assert_eq!(sim.backdoor_read(0, 0).unwrap(), 0xA5);
    }

    #[test]
    fn swap_and_reprogram() {
        let spec = two_domain_spec();
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        let b_hash = sim.slave_state_hash(1);
        let fragment = SlaveFragment {
            clock_domain: None,
            registers: (0..3)
                .map(|i| crate::spec::SettingSpec {
                    name: format!("n{i}"),
                    offset: i,
                    width: 12,
                    reset_value: 1,
                })
                .collect(),
        };
        sim.swap_module(0, &fragment).unwrap();
        assert_eq!(sim.slave_state_hash(1), b_hash);
        assert_eq!(sim.backdoor_read(0, 2).unwrap(), 1);
        let script = ProgramScript {
            writes: vec![write(0, 0, 0x111), write(0, 1, 0x222), write(0, 2, 0x333)],
            ..Default::default()
        };
        sim.load(&script).unwrap();
        assert!(sim.run_until_idle(10_000_000));
        for i in 0..3 {
            assert_eq!(sim.backdoor_read(0, i).unwrap(), 0x111 * (i + 1));
        }
    }

    #[test]
    fn swap_refused_mid_transaction() {
        let spec = two_domain_spec();
        let mut sim = Simulator::new(&spec, SimConfig::default()).unwrap();
        let script = ProgramScript {
            writes: vec![write(10, 0, 1)],
            busy_windows: vec![BusyWindow {
                slave: "a".into(),
                start_ps: 0,
                end_ps: 1_000_000,
            }],
            swaps: vec![],
        };
        sim.run(&script, 200_000).unwrap();
        let fragment = SlaveFragment {
            clock_domain: None,
            registers: vec![],
        };
        assert!(matches!(
            sim.swap_module(0, &fragment),
            Err(SimError::SwapRefused {
                reason: SwapRefusal::InFlight,
                ..
            })
        ));
        assert_eq!(sim.trace().violations().last().unwrap().0, ViolationKind::SwapRefused);
    }
}
