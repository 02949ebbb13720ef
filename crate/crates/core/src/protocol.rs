//! Configuration bus: signal set, address decoding, the in-order master and
//! the Ready-gated slave configuration block.
//!
//! All step functions describe one configuration-clock edge. Inputs are the
//! pre-edge values; results are what the registers hold after the edge.
//!
//! A write completes on the first edge where `cfg_write && cfg_sel[s] &&
//! ready[s]`. The master holds address, data and select stable until then,
//! so a slave that is busy simply delays the write; nothing is dropped unless
//! the optional timeout budget runs out.

use crate::spec::{address_map, low_mask, RegisterMapSpec};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, VecDeque};

/// Values on the configuration bus during one configuration cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BusSignals {
    pub cfg_addr: u64,
    pub cfg_wdata: u64,
    pub cfg_write: bool,
    /// Index of the selected slave; `None` is the all-zero select vector.
    pub cfg_sel: Option<usize>,
}

impl BusSignals {
    pub fn idle() -> Self {
        BusSignals::default()
    }

    pub fn sel_onehot(&self, slaves: usize) -> Vec<bool> {
        (0..slaves).map(|i| self.cfg_sel == Some(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeHit {
    pub slave: usize,
    pub offset: u64,
}

/// Address decoder built from the decode table of a spec.
#[derive(Debug, Clone, Default)]
pub struct Decoder {
    table: HashMap<u64, DecodeHit>,
}

impl Decoder {
    pub fn new(spec: &RegisterMapSpec) -> Self {
        let table = address_map(spec)
            .into_iter()
            .map(|e| {
                let offset = spec.slaves[e.slave].registers[e.setting].offset;
                (e.address, DecodeHit { slave: e.slave, offset })
            })
            .collect();
        Decoder { table }
    }

    /// The unique slave and local word offset for `addr`, or `None` when no
    /// settings word lives there.
    pub fn decode(&self, addr: u64) -> Option<DecodeHit> {
        self.table.get(&addr).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TxState {
    Pending,
    Held,
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WriteTransaction {
    /// Position in the master's issue order.
    pub seq: u64,
    pub addr: u64,
    pub data: u64,
    pub state: TxState,
    pub issue_cycle: Option<u64>,
    pub accept_cycle: Option<u64>,
}

impl WriteTransaction {
    fn advance(&mut self, to: TxState) {
        debug_assert!(
            matches!(
                (self.state, to),
                (TxState::Pending, TxState::Held) | (TxState::Held, TxState::Accepted)
            ),
            "illegal transition {:?} -> {:?}",
            self.state,
            to
        );
        self.state = to;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MasterEvent {
    /// First cycle the transaction is driven on the bus.
    Issued(WriteTransaction),
    Accepted { tx: WriteTransaction, slave: usize, offset: u64 },
    /// No settings word at the address; the write is dropped.
    Unmapped(WriteTransaction),
    /// The addressed slave stayed not-ready for the whole budget.
    TimedOut { tx: WriteTransaction, slave: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterOutput {
    pub signals: BusSignals,
    pub events: Vec<MasterEvent>,
}

/// Single in-order bus master with a level (hold-until-ready) handshake.
#[derive(Debug, Clone)]
pub struct BusMaster {
    queue: VecDeque<WriteTransaction>,
    current: Option<(WriteTransaction, DecodeHit)>,
    cycle: u64,
    next_seq: u64,
    timeout_cycles: Option<u64>,
    gating: bool,
}

impl Default for BusMaster {
    fn default() -> Self {
        BusMaster::new(None)
    }
}

impl BusMaster {
    pub fn new(timeout_cycles: Option<u64>) -> Self {
        BusMaster {
            queue: VecDeque::new(),
            current: None,
            cycle: 0,
            next_seq: 0,
            timeout_cycles,
            gating: true,
        }
    }

    /// Fault injection: ignore the Ready handshake entirely.
    pub fn set_gating(&mut self, enabled: bool) {
        self.gating = enabled;
    }

    pub fn push(&mut self, addr: u64, data: u64) {
        self.queue.push_back(WriteTransaction {
            seq: self.next_seq,
            addr,
            data,
            state: TxState::Pending,
            issue_cycle: None,
            accept_cycle: None,
        });
        self.next_seq += 1;
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// The transaction currently held on the bus and the slave it addresses.
    pub fn in_flight(&self) -> Option<(&WriteTransaction, DecodeHit)> {
        self.current.as_ref().map(|(tx, hit)| (tx, *hit))
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.current.is_none() && self.queue.is_empty()
    }

    /// One configuration-clock edge. `ready` holds each slave's registered
    /// Ready output as seen before the edge.
    pub fn step(&mut self, decoder: &Decoder, ready: &[bool]) -> MasterOutput {
        let cycle = self.cycle;
        self.cycle += 1;
        let mut events = Vec::new();

        if self.current.is_none() {
            if let Some(mut tx) = self.queue.pop_front() {
                tx.advance(TxState::Held);
                tx.issue_cycle = Some(cycle);
                events.push(MasterEvent::Issued(tx.clone()));
                match decoder.decode(tx.addr) {
                    Some(hit) => self.current = Some((tx, hit)),
                    None => {
                        let signals = BusSignals {
                            cfg_addr: tx.addr,
                            cfg_wdata: tx.data,
                            cfg_write: true,
                            cfg_sel: None,
                        };
                        events.push(MasterEvent::Unmapped(tx));
                        return MasterOutput { signals, events };
                    }
                }
            }
        }

        let Some((tx, hit)) = self.current.as_mut() else {
            return MasterOutput {
                signals: BusSignals::idle(),
                events,
            };
        };
        let signals = BusSignals {
            cfg_addr: tx.addr,
            cfg_wdata: tx.data,
            cfg_write: true,
            cfg_sel: Some(hit.slave),
        };
        let slave_ready = ready.get(hit.slave).copied().unwrap_or(false);
        if slave_ready || !self.gating {
            let (mut tx, hit) = self.current.take().expect("held transaction");
            tx.advance(TxState::Accepted);
            tx.accept_cycle = Some(cycle);
            events.push(MasterEvent::Accepted {
                tx,
                slave: hit.slave,
                offset: hit.offset,
            });
        } else if let Some(budget) = self.timeout_cycles {
            let waited = cycle - tx.issue_cycle.expect("held transaction has an issue cycle");
            if waited >= budget {
                let (tx, hit) = self.current.take().expect("held transaction");
                events.push(MasterEvent::TimedOut { tx, slave: hit.slave });
            }
        }
        MasterOutput { signals, events }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ConfigWord {
    pub value: u64,
    pub width: u32,
}

/// Local configuration memory of one slave plus its Ready register.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlaveConfigBlock {
    /// Word offset to stored value.
    pub local_memory: BTreeMap<u64, ConfigWord>,
    /// Registered Ready output.
    pub ready_state: bool,
    /// Busy from the slave's functional logic, already synchronized into
    /// the configuration domain.
    pub busy_input: bool,
    offset_mask: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlaveStep {
    /// `(offset, new value)` when a word was written.
    pub written: Option<(u64, u64)>,
    /// New Ready value when it toggled.
    pub ready_changed: Option<bool>,
}

impl SlaveConfigBlock {
    /// Block at reset for slave `index` of `spec`: every word holds its reset
    /// value and Ready is high.
    pub fn at_reset(spec: &RegisterMapSpec, index: usize) -> Self {
        let slave = &spec.slaves[index];
        let local_memory = slave
            .registers
            .iter()
            .map(|r| {
                (
                    r.offset,
                    ConfigWord {
                        value: r.reset_value & low_mask(r.width),
                        width: r.width,
                    },
                )
            })
            .collect();
        SlaveConfigBlock {
            local_memory,
            ready_state: true,
            busy_input: false,
            offset_mask: spec.bus.offset_mask(),
        }
    }

    pub fn read(&self, offset: u64) -> Option<u64> {
        self.local_memory.get(&offset).map(|w| w.value)
    }

    /// One configuration-clock edge with Ready gating enabled.
    pub fn step(&mut self, bus: &BusSignals, me: usize) -> SlaveStep {
        self.step_gated(bus, me, true)
    }

    /// One edge; with `gate == false` writes land regardless of Ready
    /// (fault injection only).
    pub fn step_gated(&mut self, bus: &BusSignals, me: usize, gate: bool) -> SlaveStep {
        let mut out = SlaveStep::default();
        if bus.cfg_write && bus.cfg_sel == Some(me) && (self.ready_state || !gate) {
            let offset = bus.cfg_addr & self.offset_mask;
            if let Some(word) = self.local_memory.get_mut(&offset) {
                word.value = bus.cfg_wdata & low_mask(word.width);
                out.written = Some((offset, word.value));
            }
        }
        let next_ready = !self.busy_input;
        if next_ready != self.ready_state {
            self.ready_state = next_ready;
            out.ready_changed = Some(next_ready);
        }
        out
    }
}
