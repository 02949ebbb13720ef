//! Post-hoc checks over a finished trace.
//!
//! A slave is "busy" from the edge where its Ready register drops until the
//! edge where it rises again; that is the interval in which its logic may be
//! reading configuration. Within one edge, a `config_changed` logged before
//! `ready_changed` happened with the pre-edge Ready value, so event order is
//! all the checker needs.

use super::trace::{Trace, TraceKind, ViolationKind};
use serde::Serialize;
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time_ps: u64,
    pub slave: Option<usize>,
    pub addr: Option<u64>,
}

pub fn check_coherence(trace: &Trace) -> Vec<Violation> {
    let mut ready: HashMap<usize, bool> = HashMap::new();
    let mut legal: HashMap<u64, HashSet<u64>> = HashMap::new();
    for &(_, addr, value) in &trace.initial {
        legal.entry(addr).or_default().insert(value);
    }

    let mut out = Vec::new();
    for e in &trace.events {
        match e.kind {
            TraceKind::ReadyChanged => {
                if let (Some(s), Some(v)) = (e.slave, e.data) {
                    ready.insert(s, v != 0);
                }
            }
            TraceKind::ConfigChanged => {
                let slave = e.slave.expect("config_changed carries a slave");
                if !ready.get(&slave).copied().unwrap_or(true) {
                    out.push(Violation {
                        kind: ViolationKind::ConfigChangedWhileBusy,
                        time_ps: e.time_ps,
                        slave: Some(slave),
                        addr: e.addr,
                    });
                }
                if let (Some(a), Some(v)) = (e.addr, e.data) {
                    legal.entry(a).or_default().insert(v);
                }
            }
            TraceKind::SwapPerformed => {
                // a fresh module starts Ready
                if let Some(s) = e.slave {
                    ready.insert(s, true);
                }
            }
            TraceKind::ValueSampled => {
                let (Some(a), Some(v)) = (e.addr, e.data) else { continue };
                if !legal.get(&a).is_some_and(|set| set.contains(&v)) {
                    out.push(Violation {
                        kind: ViolationKind::TornWord,
                        time_ps: e.time_ps,
                        slave: e.slave,
                        addr: e.addr,
                    });
                }
            }
            _ => {}
        }
    }
    out
}
