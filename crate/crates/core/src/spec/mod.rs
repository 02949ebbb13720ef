//! Declarative register-map specification: the JSON document that drives
//! elaboration, simulation, emission and estimation.
//!
//! Integers may be written as JSON numbers, decimal strings or `0x` hex
//! strings. Unknown keys are rejected. [`serialize`] produces the canonical
//! form (pretty JSON, plain numbers, every defaulted field written out).

mod address;
pub(crate) mod int;
mod validate;

pub use address::{address_map, AddressEntry};
pub use validate::{validate, DiagCode, Diagnostic, ValidationReport};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterMapSpec {
    pub name: String,
    pub bus: BusGeometry,
    pub clock_domains: Vec<ClockDomain>,
    #[serde(default)]
    pub slaves: Vec<SlaveSpec>,
    pub architecture: ArchChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusGeometry {
    /// Host write word size in bits.
    #[serde(with = "int")]
    pub data_width: u32,
    #[serde(with = "int")]
    pub addr_width: u32,
    /// Width of the upper address field that selects a slave.
    #[serde(with = "int")]
    pub slave_select_bits: u32,
}

impl BusGeometry {
    /// Width of the lower (word offset) address field.
    pub fn offset_bits(&self) -> u32 {
        self.addr_width.saturating_sub(self.slave_select_bits)
    }

    pub fn offset_mask(&self) -> u64 {
        low_mask(self.offset_bits())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockDomain {
    pub name: String,
    #[serde(with = "int")]
    pub period_ps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaveSpec {
    pub name: String,
    pub clock_domain: String,
    #[serde(with = "int")]
    pub base_addr: u64,
    #[serde(default)]
    pub registers: Vec<SettingSpec>,
}

impl SlaveSpec {
    /// Number of words from the base address up to and including the highest
    /// used offset.
    pub fn span(&self) -> u64 {
        self.registers
            .iter()
            .map(|r| r.offset.saturating_add(1))
            .max()
            .unwrap_or(0)
    }

    pub fn setting_bits(&self) -> u64 {
        self.registers.iter().map(|r| u64::from(r.width)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSpec {
    pub name: String,
    /// Word address within the owning slave.
    #[serde(with = "int")]
    pub offset: u64,
    #[serde(with = "int")]
    pub width: u32,
    #[serde(with = "int", default)]
    pub reset_value: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One central memory fanned out on wide buses.
    Global,
    /// Central memory with an output register stage.
    GlobalRegistered,
    /// Output register, synchronizer chains and destination registers.
    GlobalCdcDest,
    /// Per-slave local memories on a shared configuration bus.
    Distributed,
}

impl Topology {
    pub const ALL: [Topology; 4] = [
        Topology::Global,
        Topology::GlobalRegistered,
        Topology::GlobalCdcDest,
        Topology::Distributed,
    ];

    pub fn is_global(self) -> bool {
        !matches!(self, Topology::Distributed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Global => "global",
            Topology::GlobalRegistered => "global_registered",
            Topology::GlobalCdcDest => "global_cdc_dest",
            Topology::Distributed => "distributed",
        }
    }

    /// Routing register stages implied by a global topology.
    pub fn stages(self) -> GlobalStages {
        match self {
            Topology::Global | Topology::Distributed => GlobalStages::default(),
            Topology::GlobalRegistered => GlobalStages {
                output_registered: true,
                ..GlobalStages::default()
            },
            Topology::GlobalCdcDest => GlobalStages {
                output_registered: true,
                cdc: true,
                dest_registers: true,
            },
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown topology `{s}`"))
    }
}

/// Register stages between the global memory and the settings' consumers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalStages {
    pub output_registered: bool,
    pub cdc: bool,
    pub dest_registers: bool,
}

fn default_sync_length() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchChoice {
    pub topology: Topology,
    #[serde(with = "int", default = "default_sync_length")]
    pub sync_length: u32,
    /// Global memory depth in words.
    #[serde(with = "int::option", default, skip_serializing_if = "Option::is_none")]
    pub global_depth: Option<u32>,
    /// Global memory word width in bits.
    #[serde(with = "int::option", default, skip_serializing_if = "Option::is_none")]
    pub global_width: Option<u32>,
}

impl RegisterMapSpec {
    /// The configuration bus runs on the first declared clock domain.
    pub fn config_domain(&self) -> Option<&ClockDomain> {
        self.clock_domains.first()
    }

    pub fn domain_index(&self, name: &str) -> Option<usize> {
        self.clock_domains.iter().position(|d| d.name == name)
    }

    pub fn slave_index(&self, name: &str) -> Option<usize> {
        self.slaves.iter().position(|s| s.name == name)
    }

    /// Total number of settings (target registers) across all slaves.
    pub fn target_count(&self) -> usize {
        self.slaves.iter().map(|s| s.registers.len()).sum()
    }

    pub fn total_setting_bits(&self) -> u64 {
        self.slaves.iter().map(SlaveSpec::setting_bits).sum()
    }
}

pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownField,
    TypeMismatch,
    Other,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownField => "unknown field",
            ParseErrorKind::TypeMismatch => "type mismatch",
            ParseErrorKind::Other => "invalid document",
        })
    }
}

#[derive(Debug, Clone, Error)]
#[error("{kind} at line {line}, column {column} (field `{path}`): {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Deserialize any JSON document, reporting the field path of the failure.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    // serde would also take a struct as a positional array; documents must be objects
    let body = text.trim_start();
    if !body.is_empty() && !body.starts_with('{') {
        let consumed = &text[..text.len() - body.len()];
        return Err(ParseError {
            kind: ParseErrorKind::TypeMismatch,
            path: ".".into(),
            line: consumed.matches('\n').count() + 1,
            column: consumed.rsplit('\n').next().map_or(0, str::len) + 1,
            message: "expected a JSON object".into(),
        });
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        json_error(path, err.into_inner())
    })?;
    // trailing characters are a syntax error too
    de.end().map_err(|e| json_error(".".into(), e))?;
    Ok(value)
}

fn json_error(path: String, inner: serde_json::Error) -> ParseError {
    let message = inner.to_string();
    let kind = match inner.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => ParseErrorKind::Syntax,
        serde_json::error::Category::Data if message.starts_with("unknown field") => ParseErrorKind::UnknownField,
        serde_json::error::Category::Data
            if message.starts_with("invalid type") || message.starts_with("invalid value") =>
        {
            ParseErrorKind::TypeMismatch
        }
        _ => ParseErrorKind::Other,
    };
    ParseError {
        kind,
        path,
        line: inner.line(),
        column: inner.column(),
        message,
    }
}

/// Parse a spec document. Only structure is checked here; see [`validate`].
pub fn parse_spec(text: &str) -> Result<RegisterMapSpec, ParseError> {
    parse_json(text)
}

/// Canonical JSON form of a spec.
pub fn serialize(spec: &RegisterMapSpec) -> String {
    let mut out = serde_json::to_string_pretty(spec).expect("spec serializes");
    out.push('\n');
    out
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("spec failed validation:\n{0}")]
    Invalid(ValidationReport),
}

/// Parse and validate in one step.
pub fn load_spec(text: &str) -> Result<RegisterMapSpec, LoadError> {
    let spec = parse_spec(text)?;
    let report = validate(&spec);
    if report.is_empty() {
        Ok(spec)
    } else {
        Err(LoadError::Invalid(report))
    }
}
