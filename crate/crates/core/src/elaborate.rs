//! Structural elaboration of a register map into flip-flop banks, decoders,
//! synchronizer chains and the wire bundles between them.
//!
//! Element names are global (`cfg_decoder`, `global_mem`, ...) or scoped to a
//! slave as `<slave>/<role>`. Because roles never contain `/`, scoped names
//! cannot collide with each other or with global ones.

use crate::spec::{GlobalStages, RegisterMapSpec, Topology};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub const DECODER: &str = "cfg_decoder";
pub const HOST_BUS: &str = "cfg_bus";
pub const GLOBAL_MEM: &str = "global_mem";
pub const GLOBAL_MEM_OUT: &str = "global_mem_out";
pub const READY_MUX: &str = "ready_mux";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    /// The host-side configuration interface.
    Host,
    Element(String),
    /// Functional logic of a slave, which consumes its settings.
    SlaveLogic(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Host => f.write_str("host"),
            Endpoint::Element(n) => write!(f, "element:{n}"),
            Endpoint::SlaveLogic(n) => write!(f, "logic:{n}"),
        }
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Element {
    FlipflopBank {
        name: String,
        bits: u64,
        clock_domain: String,
    },
    Decoder {
        name: String,
        inputs: u32,
        terms: u64,
    },
    Mux {
        name: String,
        width: u64,
        ways: u64,
    },
    SyncChain {
        name: String,
        bits: u64,
        length: u32,
        clock_domain: String,
    },
    WireBundle {
        name: String,
        bits: u64,
        source: Endpoint,
        sink: Endpoint,
    },
}

impl Element {
    pub fn name(&self) -> &str {
        match self {
            Element::FlipflopBank { name, .. }
            | Element::Decoder { name, .. }
            | Element::Mux { name, .. }
            | Element::SyncChain { name, .. }
            | Element::WireBundle { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Element::FlipflopBank { .. } => "flipflop_bank",
            Element::Decoder { .. } => "decoder",
            Element::Mux { .. } => "mux",
            Element::SyncChain { .. } => "sync_chain",
            Element::WireBundle { .. } => "wire_bundle",
        }
    }

    /// Flip-flops held by this element.
    pub fn flipflops(&self) -> u64 {
        match self {
            Element::FlipflopBank { bits, .. } => *bits,
            Element::SyncChain { bits, length, .. } => bits * u64::from(*length),
            _ => 0,
        }
    }

    fn is_register(&self) -> bool {
        matches!(self, Element::FlipflopBank { .. } | Element::SyncChain { .. })
    }
}

/// Where the bus writes one setting, and where its consumer reads it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettingSlot {
    pub slave: usize,
    pub setting: usize,
    /// Storage bank written through the decoder.
    pub storage: String,
    pub bit_offset: u64,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlaveSubModel {
    pub name: String,
    /// Names of the elements that belong to this slave.
    pub elements: Vec<String>,
    /// Last register stage before the slave's logic, if the slave has one.
    pub terminal: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignModel {
    pub name: String,
    pub topology: Topology,
    pub stages: GlobalStages,
    pub sync_length: u32,
    pub elements: Vec<Element>,
    pub slaves: Vec<SlaveSubModel>,
    pub layout: Vec<SettingSlot>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StructuralCounts {
    pub flipflops: u64,
    pub decode_terms: u64,
    pub mux_bits: u64,
    pub max_unregistered_bundle_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElaborateError {
    #[error("topology {0} cannot be elaborated by this routine")]
    WrongTopology(Topology),
    #[error("global memory geometry (global_depth, global_width) is missing")]
    MissingGeometry,
    #[error("global memory holds {available} bits but the settings need {needed}")]
    Capacity { needed: u64, available: u64 },
    #[error("spec declares no clock domains")]
    NoClock,
}

impl DesignModel {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name() == name)
    }

    /// Canonical JSON dump, stable across runs.
    pub fn canonical_dump(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("model serializes");
        out.push('\n');
        out
    }

    pub fn content_hash(&self) -> String {
        crate::sha256_hex(self.canonical_dump().as_bytes())
    }

    /// Structural counts restricted to one slave's sub-model.
    pub fn slave_counts(&self, slave: usize) -> StructuralCounts {
        let names = &self.slaves[slave].elements;
        counts_over(self, self.elements.iter().filter(|e| names.iter().any(|n| n == e.name())))
    }

    /// Bundles whose endpoints are not all known. Empty for any model this
    /// module produces.
    pub fn dangling_endpoints(&self) -> Vec<String> {
        let known: BTreeMap<&str, ()> = self.elements.iter().map(|e| (e.name(), ())).collect();
        let mut bad = Vec::new();
        for e in &self.elements {
            if let Element::WireBundle { name, source, sink, .. } = e {
                for ep in [source, sink] {
                    let ok = match ep {
                        Endpoint::Host => true,
                        Endpoint::Element(n) => known.contains_key(n.as_str()) && n != name,
                        Endpoint::SlaveLogic(s) => self.slaves.iter().any(|m| &m.name == s),
                    };
                    if !ok {
                        bad.push(format!("{name}: {ep}"));
                    }
                }
            }
        }
        bad
    }
}

fn counts_over<'a>(model: &DesignModel, elements: impl Iterator<Item = &'a Element>) -> StructuralCounts {
    let mut c = StructuralCounts::default();
    for e in elements {
        c.flipflops += e.flipflops();
        match e {
            Element::Decoder { terms, .. } => c.decode_terms += terms,
            Element::Mux { width, ways, .. } => c.mux_bits += width * ways,
            Element::WireBundle { bits, source, sink, .. } => {
                let registered = |ep: &Endpoint| match ep {
                    Endpoint::Element(n) => model.element(n).is_some_and(Element::is_register),
                    _ => false,
                };
                if !(registered(source) && registered(sink)) {
                    c.max_unregistered_bundle_bits = c.max_unregistered_bundle_bits.max(*bits);
                }
            }
            _ => {}
        }
    }
    c
}

pub fn structural_counts(model: &DesignModel) -> StructuralCounts {
    counts_over(model, model.elements.iter())
}

/// Elaborate according to the spec's own topology.
pub fn elaborate(spec: &RegisterMapSpec) -> Result<DesignModel, ElaborateError> {
    match spec.architecture.topology {
        Topology::Distributed => elaborate_distributed(spec),
        t => elaborate_global(spec, t.stages()),
    }
}

struct Builder {
    elements: Vec<Element>,
    slaves: Vec<SlaveSubModel>,
}

impl Builder {
    fn add(&mut self, owner: Option<usize>, e: Element) {
        if let Some(s) = owner {
            self.slaves[s].elements.push(e.name().to_string());
        }
        self.elements.push(e);
    }

    fn finish(
        mut self,
        spec: &RegisterMapSpec,
        topology: Topology,
        stages: GlobalStages,
        layout: Vec<SettingSlot>,
    ) -> DesignModel {
        self.elements.sort_by(|a, b| (a.kind(), a.name()).cmp(&(b.kind(), b.name())));
        for s in &mut self.slaves {
            s.elements.sort();
        }
        DesignModel {
            name: spec.name.clone(),
            topology,
            stages,
            sync_length: spec.architecture.sync_length,
            elements: self.elements,
            slaves: self.slaves,
            layout,
        }
    }
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b.max(1))
}

/// Global memory of `global_depth` x `global_width` flip-flops, written by a
/// one-term-per-bus-word decoder and fanned out to every slave.
///
/// Settings are packed back to back into the flattened memory. Words not
/// covered by any setting remain as storage.
pub fn elaborate_global(spec: &RegisterMapSpec, stages: GlobalStages) -> Result<DesignModel, ElaborateError> {
    let topology = spec.architecture.topology;
    if !topology.is_global() {
        return Err(ElaborateError::WrongTopology(topology));
    }
    let (depth, width) = match (spec.architecture.global_depth, spec.architecture.global_width) {
        (Some(d), Some(w)) => (u64::from(d), u64::from(w)),
        _ => return Err(ElaborateError::MissingGeometry),
    };
    let available = depth * width;
    let needed = spec.total_setting_bits();
    if needed > available {
        return Err(ElaborateError::Capacity { needed, available });
    }
    let cfg_domain = spec.config_domain().ok_or(ElaborateError::NoClock)?.name.clone();
    let bus = spec.bus;
    let data_width = u64::from(bus.data_width);
    let terms = depth * div_ceil(width, data_width);
    let sync_length = spec.architecture.sync_length;

    let mut b = Builder {
        elements: Vec::new(),
        slaves: spec
            .slaves
            .iter()
            .map(|s| SlaveSubModel {
                name: s.name.clone(),
                elements: Vec::new(),
                terminal: None,
            })
            .collect(),
    };

    b.add(
        None,
        Element::Decoder {
            name: DECODER.into(),
            inputs: bus.addr_width,
            terms,
        },
    );
    b.add(
        None,
        Element::WireBundle {
            name: HOST_BUS.into(),
            bits: u64::from(bus.addr_width) + data_width + 1,
            source: Endpoint::Host,
            sink: Endpoint::Element(DECODER.into()),
        },
    );
    b.add(
        None,
        Element::FlipflopBank {
            name: GLOBAL_MEM.into(),
            bits: available,
            clock_domain: cfg_domain.clone(),
        },
    );
    // one enable per decoded word plus the write-data lane
    b.add(
        None,
        Element::WireBundle {
            name: "global_wr".into(),
            bits: terms + data_width,
            source: Endpoint::Element(DECODER.into()),
            sink: Endpoint::Element(GLOBAL_MEM.into()),
        },
    );
    let mut source = GLOBAL_MEM.to_string();
    if stages.output_registered {
        b.add(
            None,
            Element::FlipflopBank {
                name: GLOBAL_MEM_OUT.into(),
                bits: available,
                clock_domain: cfg_domain.clone(),
            },
        );
        b.add(
            None,
            Element::WireBundle {
                name: "global_mem_reg".into(),
                bits: available,
                source: Endpoint::Element(GLOBAL_MEM.into()),
                sink: Endpoint::Element(GLOBAL_MEM_OUT.into()),
            },
        );
        source = GLOBAL_MEM_OUT.to_string();
    }

    let mut layout = Vec::new();
    let mut cursor = 0u64;
    for (si, slave) in spec.slaves.iter().enumerate() {
        for (ri, r) in slave.registers.iter().enumerate() {
            layout.push(SettingSlot {
                slave: si,
                setting: ri,
                storage: GLOBAL_MEM.into(),
                bit_offset: cursor,
                width: r.width,
            });
            cursor += u64::from(r.width);
        }
        let bits = slave.setting_bits();
        if bits == 0 {
            continue;
        }
        let domain = slave.clock_domain.clone();
        let mut chain: Vec<String> = Vec::new();
        if stages.cdc {
            let name = format!("{}/sync", slave.name);
            b.add(
                Some(si),
                Element::SyncChain {
                    name: name.clone(),
                    bits,
                    length: sync_length,
                    clock_domain: domain.clone(),
                },
            );
            chain.push(name);
        }
        if stages.dest_registers {
            let name = format!("{}/dest", slave.name);
            b.add(
                Some(si),
                Element::FlipflopBank {
                    name: name.clone(),
                    bits,
                    clock_domain: domain.clone(),
                },
            );
            chain.push(name);
        }
        let first = chain
            .first()
            .map(|n| Endpoint::Element(n.clone()))
            .unwrap_or_else(|| Endpoint::SlaveLogic(slave.name.clone()));
        b.add(
            Some(si),
            Element::WireBundle {
                name: format!("{}/fanout", slave.name),
                bits,
                source: Endpoint::Element(source.clone()),
                sink: first,
            },
        );
        if let [sync, dest] = &chain[..] {
            b.add(
                Some(si),
                Element::WireBundle {
                    name: format!("{}/sync_dest", slave.name),
                    bits,
                    source: Endpoint::Element(sync.clone()),
                    sink: Endpoint::Element(dest.clone()),
                },
            );
        }
        b.slaves[si].terminal = Some(chain.last().cloned().unwrap_or_else(|| source.clone()));
    }

    Ok(b.finish(spec, topology, stages, layout))
}

/// Shared narrow bus, one decoder, and per slave a local settings bank, a
/// Ready register and a busy synchronizer.
pub fn elaborate_distributed(spec: &RegisterMapSpec) -> Result<DesignModel, ElaborateError> {
    let topology = spec.architecture.topology;
    if topology != Topology::Distributed {
        return Err(ElaborateError::WrongTopology(topology));
    }
    let cfg_domain = spec.config_domain().ok_or(ElaborateError::NoClock)?.name.clone();
    let bus = spec.bus;
    let addr = u64::from(bus.addr_width);
    let data = u64::from(bus.data_width);

    let mut b = Builder {
        elements: Vec::new(),
        slaves: spec
            .slaves
            .iter()
            .map(|s| SlaveSubModel {
                name: s.name.clone(),
                elements: Vec::new(),
                terminal: Some(format!("{}/cfg", s.name)),
            })
            .collect(),
    };
    b.add(
        None,
        Element::Decoder {
            name: DECODER.into(),
            inputs: bus.addr_width,
            terms: spec.target_count() as u64,
        },
    );
    if !spec.slaves.is_empty() {
        b.add(
            None,
            Element::WireBundle {
                name: HOST_BUS.into(),
                bits: addr + data + 1,
                source: Endpoint::Host,
                sink: Endpoint::Element(DECODER.into()),
            },
        );
        b.add(
            None,
            Element::Mux {
                name: READY_MUX.into(),
                width: 1,
                ways: spec.slaves.len() as u64,
            },
        );
        b.add(
            None,
            Element::WireBundle {
                name: "ready_ret".into(),
                bits: 1,
                source: Endpoint::Element(READY_MUX.into()),
                sink: Endpoint::Host,
            },
        );
    }

    let mut layout = Vec::new();
    for (si, slave) in spec.slaves.iter().enumerate() {
        let cfg = format!("{}/cfg", slave.name);
        let ready = format!("{}/ready", slave.name);
        let mut cursor = 0u64;
        for (ri, r) in slave.registers.iter().enumerate() {
            layout.push(SettingSlot {
                slave: si,
                setting: ri,
                storage: cfg.clone(),
                bit_offset: cursor,
                width: r.width,
            });
            cursor += u64::from(r.width);
        }
        b.add(
            Some(si),
            Element::FlipflopBank {
                name: cfg.clone(),
                bits: slave.setting_bits(),
                clock_domain: cfg_domain.clone(),
            },
        );
        b.add(
            Some(si),
            Element::FlipflopBank {
                name: ready.clone(),
                bits: 1,
                clock_domain: cfg_domain.clone(),
            },
        );
        b.add(
            Some(si),
            Element::SyncChain {
                name: format!("{}/busy_sync", slave.name),
                bits: 1,
                length: spec.architecture.sync_length,
                clock_domain: cfg_domain.clone(),
            },
        );
        // addr, data, write and this slave's select line
        b.add(
            Some(si),
            Element::WireBundle {
                name: format!("{}/port", slave.name),
                bits: addr + data + 2,
                source: Endpoint::Element(DECODER.into()),
                sink: Endpoint::Element(cfg),
            },
        );
        b.add(
            Some(si),
            Element::WireBundle {
                name: format!("{}/ready_out", slave.name),
                bits: 1,
                source: Endpoint::Element(ready),
                sink: Endpoint::Element(READY_MUX.into()),
            },
        );
    }

    Ok(b.finish(spec, topology, GlobalStages::default(), layout))
}
