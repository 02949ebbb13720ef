use super::{low_mask, RegisterMapSpec};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Stable diagnostic codes. The numeric part never changes meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    DuplicateSlaveName,
    DuplicateClockDomain,
    UnknownClockDomain,
    OverlappingSlaves,
    BadDataWidth,
    BadAddressGeometry,
    TooManySlaves,
    DuplicateOffset,
    OffsetOutOfWindow,
    MisalignedBase,
    BadSettingWidth,
    ResetValueTooWide,
    ZeroPeriod,
    SyncLengthTooShort,
    MissingGlobalGeometry,
    GlobalCapacity,
    EmptyName,
    NoClockDomains,
}

impl DiagCode {
    pub fn code(self) -> &'static str {
        match self {
            DiagCode::DuplicateSlaveName => "RM001",
            DiagCode::DuplicateClockDomain => "RM002",
            DiagCode::UnknownClockDomain => "RM003",
            DiagCode::OverlappingSlaves => "RM004",
            DiagCode::BadDataWidth => "RM005",
            DiagCode::BadAddressGeometry => "RM006",
            DiagCode::TooManySlaves => "RM007",
            DiagCode::DuplicateOffset => "RM008",
            DiagCode::OffsetOutOfWindow => "RM009",
            DiagCode::MisalignedBase => "RM010",
            DiagCode::BadSettingWidth => "RM011",
            DiagCode::ResetValueTooWide => "RM012",
            DiagCode::ZeroPeriod => "RM013",
            DiagCode::SyncLengthTooShort => "RM014",
            DiagCode::MissingGlobalGeometry => "RM015",
            DiagCode::GlobalCapacity => "RM016",
            DiagCode::EmptyName => "RM017",
            DiagCode::NoClockDomains => "RM018",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    /// Field path in the spec document, e.g. `slaves[1].registers[0].width`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code.code(), self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// Distinct codes in report order.
    pub fn codes(&self) -> Vec<DiagCode> {
        let mut seen = BTreeSet::new();
        self.diagnostics
            .iter()
            .map(|d| d.code)
            .filter(|c| seen.insert(*c))
            .collect()
    }

    pub fn contains(&self, code: DiagCode) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }

    fn push(&mut self, code: DiagCode, path: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            code,
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Check every structural invariant of a spec. Violations are returned as
/// data; an empty report means the spec is usable downstream.
pub fn validate(spec: &RegisterMapSpec) -> ValidationReport {
    let mut r = ValidationReport::default();
    let bus = &spec.bus;

    if spec.name.is_empty() {
        r.push(DiagCode::EmptyName, "name", "design name is empty");
    }

    if bus.data_width == 0 || bus.data_width > 64 {
        r.push(
            DiagCode::BadDataWidth,
            "bus.data_width",
            format!("data width {} outside 1..=64", bus.data_width),
        );
    }
    let geometry_ok = bus.addr_width >= 1 && bus.addr_width <= 64 && bus.slave_select_bits < bus.addr_width;
    if !geometry_ok {
        r.push(
            DiagCode::BadAddressGeometry,
            "bus",
            format!(
                "need 0 <= slave_select_bits ({}) < addr_width ({}) <= 64",
                bus.slave_select_bits, bus.addr_width
            ),
        );
    }
    if geometry_ok {
        let capacity = 1u128 << bus.slave_select_bits;
        if spec.slaves.len() as u128 > capacity {
            r.push(
                DiagCode::TooManySlaves,
                "slaves",
                format!(
                    "{} slaves but {} select bits address only {capacity}",
                    spec.slaves.len(),
                    bus.slave_select_bits
                ),
            );
        }
    }

    if spec.clock_domains.is_empty() {
        r.push(DiagCode::NoClockDomains, "clock_domains", "at least one clock domain is required");
    }
    let mut domain_names = BTreeMap::new();
    for (i, d) in spec.clock_domains.iter().enumerate() {
        if d.name.is_empty() {
            r.push(DiagCode::EmptyName, format!("clock_domains[{i}].name"), "empty name");
        }
        if let Some(first) = domain_names.insert(d.name.as_str(), i) {
            r.push(
                DiagCode::DuplicateClockDomain,
                format!("clock_domains[{i}].name"),
                format!("clock domain `{}` already declared at clock_domains[{first}]", d.name),
            );
        }
        if d.period_ps == 0 {
            r.push(DiagCode::ZeroPeriod, format!("clock_domains[{i}].period_ps"), "period must be > 0");
        }
    }

    let offset_bits = bus.offset_bits();
    let window = if geometry_ok { 1u128 << offset_bits } else { 0 };
    let mut slave_names = BTreeMap::new();
    for (si, s) in spec.slaves.iter().enumerate() {
        let at = format!("slaves[{si}]");
        if s.name.is_empty() {
            r.push(DiagCode::EmptyName, format!("{at}.name"), "empty name");
        }
        if let Some(first) = slave_names.insert(s.name.as_str(), si) {
            r.push(
                DiagCode::DuplicateSlaveName,
                format!("{at}.name"),
                format!("slave `{}` already declared at slaves[{first}]", s.name),
            );
        }
        if !spec.clock_domains.iter().any(|d| d.name == s.clock_domain) {
            r.push(
                DiagCode::UnknownClockDomain,
                format!("{at}.clock_domain"),
                format!("slave `{}` references undefined clock domain `{}`", s.name, s.clock_domain),
            );
        }
        if geometry_ok {
            let in_space = (s.base_addr as u128) < (1u128 << bus.addr_width);
            if !in_space || s.base_addr & low_mask(offset_bits) != 0 {
                r.push(
                    DiagCode::MisalignedBase,
                    format!("{at}.base_addr"),
                    format!(
                        "base 0x{:x} must be inside the {}-bit address space with a zero {}-bit offset field",
                        s.base_addr, bus.addr_width, offset_bits
                    ),
                );
            }
        }

        let mut offsets = BTreeMap::new();
        for (ri, reg) in s.registers.iter().enumerate() {
            let rat = format!("{at}.registers[{ri}]");
            if reg.name.is_empty() {
                r.push(DiagCode::EmptyName, format!("{rat}.name"), "empty name");
            }
            if let Some(first) = offsets.insert(reg.offset, ri) {
                r.push(
                    DiagCode::DuplicateOffset,
                    format!("{rat}.offset"),
                    format!("offset {} already used by registers[{first}]", reg.offset),
                );
            }
            if geometry_ok && reg.offset as u128 >= window {
                r.push(
                    DiagCode::OffsetOutOfWindow,
                    format!("{rat}.offset"),
                    format!("offset {} does not fit the {offset_bits}-bit offset field", reg.offset),
                );
            }
            if reg.width == 0 || reg.width > bus.data_width {
                r.push(
                    DiagCode::BadSettingWidth,
                    format!("{rat}.width"),
                    format!("width {} outside 1..={} (bus data width)", reg.width, bus.data_width),
                );
            }
            if reg.width < 64 && reg.width > 0 && reg.reset_value > low_mask(reg.width) {
                r.push(
                    DiagCode::ResetValueTooWide,
                    format!("{rat}.reset_value"),
                    format!("reset value 0x{:x} does not fit {} bits", reg.reset_value, reg.width),
                );
            }
        }
    }

    // Address windows [base, base + 2^offset_bits) must be disjoint.
    if geometry_ok {
        let mut windows: Vec<(u128, usize)> =
            spec.slaves.iter().enumerate().map(|(i, s)| (s.base_addr as u128, i)).collect();
        windows.sort();
        for pair in windows.windows(2) {
            let (a_base, a) = pair[0];
            let (b_base, b) = pair[1];
            if a_base + window > b_base {
                r.push(
                    DiagCode::OverlappingSlaves,
                    format!("slaves[{b}].base_addr"),
                    format!(
                        "address window of `{}` overlaps `{}`",
                        spec.slaves[b].name, spec.slaves[a].name
                    ),
                );
            }
        }
    }

    let arch = &spec.architecture;
    if arch.topology.is_global() {
        match (arch.global_depth, arch.global_width) {
            (Some(d), Some(w)) if d > 0 && w > 0 => {
                let capacity = u64::from(d) * u64::from(w);
                if capacity < spec.total_setting_bits() {
                    r.push(
                        DiagCode::GlobalCapacity,
                        "architecture",
                        format!(
                            "global memory {d}x{w} = {capacity} bits cannot hold {} setting bits",
                            spec.total_setting_bits()
                        ),
                    );
                }
            }
            _ => r.push(
                DiagCode::MissingGlobalGeometry,
                "architecture",
                "global topologies need positive global_depth and global_width",
            ),
        }
    }
    let min_sync = match arch.topology {
        crate::spec::Topology::GlobalCdcDest => 2,
        crate::spec::Topology::Distributed => 1,
        _ => 0,
    };
    if arch.sync_length < min_sync {
        r.push(
            DiagCode::SyncLengthTooShort,
            "architecture.sync_length",
            format!("{} needs sync_length >= {min_sync}", arch.topology),
        );
    }

    r
}
