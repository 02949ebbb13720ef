//! Resource estimates for the four architectures.
//!
//! Registers are closed form and exact: the elaborated flip-flop count plus
//! a per-topology overhead constant. ALMs, ALUTs and fmax are calibrated
//! fits against a small corpus of measured designs (see [`calibrate`]).

mod calibrate;
mod sweep;

pub use calibrate::{
    calibrate, default_corpus, least_squares, AlmFamily, AlmFit, AlutFit, Calibration, CorpusPoint, FmaxFit, Measured,
    Residual,
};
pub use sweep::{compare, parse_point, parse_range, rows_to_csv, sweep, CompareReport, SweepRanges, SweepRow, SWEEP_HEADER};

use crate::elaborate::{elaborate_distributed, elaborate_global, structural_counts, ElaborateError, StructuralCounts};
use crate::spec::{
    ArchChoice, BusGeometry, ClockDomain, GlobalStages, RegisterMapSpec, SettingSpec, SlaveSpec, Topology,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One point of the design space.
///
/// For the global family, `targets` settings are spread round-robin over
/// `slaves` consumers; for the distributed family every slave holds
/// `targets` settings of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub topology: Topology,
    /// Register stages; only meaningful for the global family.
    pub stages: GlobalStages,
    #[serde(rename = "D")]
    pub depth: u32,
    #[serde(rename = "W")]
    pub width: u32,
    #[serde(rename = "N_t")]
    pub targets: u32,
    #[serde(rename = "w")]
    pub target_width: u32,
    #[serde(rename = "L")]
    pub sync_length: u32,
    #[serde(rename = "S")]
    pub slaves: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub registers: u64,
    pub alms: f64,
    pub aluts: f64,
    pub fmax_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("invalid design point: {0}")]
    InvalidPoint(String),
    #[error(transparent)]
    Elaborate(#[from] ElaborateError),
    #[error("no calibration for the {0} family")]
    Uncalibrated(String),
    #[error("{fit}: least-squares system is rank deficient ({rows} points, {cols} coefficients)")]
    RankDeficient { fit: String, rows: usize, cols: usize },
    #[error("{0}")]
    BadFit(String),
}

/// Configuration-bus clock used for synthesized specs.
pub const POINT_CFG_PERIOD_PS: u64 = 10_000;
/// Clock of the consuming logic in synthesized specs.
pub const POINT_SLAVE_PERIOD_PS: u64 = 7_000;

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

impl DesignPoint {
    /// The 256 x 32 memory / 226 x 32-bit target design with one slave.
    pub fn new(topology: Topology) -> Self {
        DesignPoint {
            topology,
            stages: topology.stages(),
            depth: 256,
            width: 32,
            targets: 226,
            target_width: 32,
            sync_length: 2,
            slaves: 1,
        }
    }

    pub fn is_global(&self) -> bool {
        self.topology.is_global()
    }

    /// Topology name, or `global+out+cdc+dest` style for stage mixes that
    /// have no name of their own.
    pub fn label(&self) -> String {
        if !self.is_global() {
            return Topology::Distributed.as_str().into();
        }
        if let Some(t) = Topology::ALL.into_iter().find(|t| t.is_global() && t.stages() == self.stages) {
            return t.as_str().into();
        }
        let mut s = String::from("global");
        for (on, tag) in [
            (self.stages.output_registered, "+out"),
            (self.stages.cdc, "+cdc"),
            (self.stages.dest_registers, "+dest"),
        ] {
            if on {
                s.push_str(tag);
            }
        }
        s
    }

    pub fn check(&self) -> Result<(), CostError> {
        let bad = |m: String| Err(CostError::InvalidPoint(m));
        if self.target_width == 0 || self.target_width > 64 {
            return bad(format!("w = {} must be in 1..=64", self.target_width));
        }
        if self.slaves == 0 {
            return bad("S must be at least 1".into());
        }
        if self.is_global() {
            if self.depth == 0 || self.width == 0 {
                return bad("D and W must be positive for a global point".into());
            }
            let needed = u64::from(self.targets) * u64::from(self.target_width);
            if needed > u64::from(self.depth) * u64::from(self.width) {
                return bad(format!(
                    "{} x {} targets do not fit a {} x {} memory",
                    self.targets, self.target_width, self.depth, self.width
                ));
            }
            if self.stages.cdc && self.sync_length < 2 {
                return bad("L must be at least 2 with synchronizer chains".into());
            }
        } else if self.sync_length == 0 {
            return bad("L must be at least 1 for the distributed bus".into());
        }
        Ok(())
    }

    /// Settings held by slave `i`.
    fn slave_targets(&self, i: u32) -> u32 {
        if self.is_global() {
            self.targets / self.slaves + u32::from(i < self.targets % self.slaves)
        } else {
            self.targets
        }
    }

    /// A concrete register map realizing this point.
    pub fn to_spec(&self) -> Result<RegisterMapSpec, CostError> {
        self.check()?;
        let per_slave_max = (0..self.slaves.min(2)).map(|i| self.slave_targets(i)).max().unwrap_or(0);
        let offset_bits = ceil_log2(u64::from(per_slave_max)).max(1);
        let select_bits = ceil_log2(u64::from(self.slaves)).max(1);
        let addr_width = offset_bits + select_bits;
        if addr_width > 64 {
            return Err(CostError::InvalidPoint("address space exceeds 64 bits".into()));
        }
        let slaves = (0..self.slaves)
            .map(|i| SlaveSpec {
                name: format!("s{i}"),
                clock_domain: "slave".into(),
                base_addr: u64::from(i) << offset_bits,
                registers: (0..self.slave_targets(i))
                    .map(|r| SettingSpec {
                        name: format!("r{r}"),
                        offset: u64::from(r),
                        width: self.target_width,
                        reset_value: 0,
                    })
                    .collect(),
            })
            .collect();
        let topology = if self.is_global() {
            Topology::ALL
                .into_iter()
                .find(|t| t.is_global() && t.stages() == self.stages)
                .unwrap_or(Topology::Global)
        } else {
            Topology::Distributed
        };
        Ok(RegisterMapSpec {
            name: format!("point_{}", self.label().replace('+', "_")),
            bus: BusGeometry {
                data_width: self.target_width,
                addr_width,
                slave_select_bits: select_bits,
            },
            clock_domains: vec![
                ClockDomain {
                    name: "cfg".into(),
                    period_ps: POINT_CFG_PERIOD_PS,
                },
                ClockDomain {
                    name: "slave".into(),
                    period_ps: POINT_SLAVE_PERIOD_PS,
                },
            ],
            slaves,
            architecture: ArchChoice {
                topology,
                sync_length: self.sync_length,
                global_depth: self.is_global().then_some(self.depth),
                global_width: self.is_global().then_some(self.width),
            },
        })
    }

    /// Structural counts of the elaborated point.
    pub fn structure(&self) -> Result<StructuralCounts, CostError> {
        let spec = self.to_spec()?;
        let model = if self.is_global() {
            elaborate_global(&spec, self.stages)?
        } else {
            elaborate_distributed(&spec)?
        };
        Ok(structural_counts(&model))
    }

    /// Total target bits `N_t * w`.
    fn target_bits(&self) -> u64 {
        u64::from(self.targets) * u64::from(self.target_width)
    }
}

/// Registers the implementation adds on top of the elaborated flip-flops.
/// Per distributed slave the elaborator already counts the Ready register
/// and the busy synchronizer, so only the rest of the per-slave constant
/// remains.
pub fn overhead(p: &DesignPoint, cal: &Calibration) -> i64 {
    if p.is_global() {
        cal.c_global
    } else {
        i64::from(p.slaves) * (cal.c_distributed_per_slave - 1 - i64::from(p.sync_length))
    }
}

/// Registers before the overhead constant is added.
fn structural_registers(p: &DesignPoint) -> u64 {
    if p.is_global() {
        let memory = u64::from(p.depth) * u64::from(p.width);
        let stages = u64::from(p.sync_length) * u64::from(p.stages.cdc) + u64::from(p.stages.dest_registers);
        memory * (1 + u64::from(p.stages.output_registered)) + p.target_bits() * stages
    } else {
        let per_slave = u64::from(p.targets) * u64::from(p.target_width) + 1 + u64::from(p.sync_length);
        u64::from(p.slaves) * per_slave
    }
}

/// Global: `D*W*(1 + out) + N_t*w*(L*cdc + dest) + c_global`.
/// Distributed: `S*N_t*w + S*c_dist`.
pub fn estimate_registers(p: &DesignPoint, cal: &Calibration) -> u64 {
    (structural_registers(p) as i64 + overhead(p, cal)).max(0) as u64
}

pub fn estimate_aluts(p: &DesignPoint, cal: &Calibration) -> Result<f64, CostError> {
    let terms = p.structure()?.decode_terms;
    Ok(cal.alut.evaluate(terms))
}

pub fn estimate_alms(p: &DesignPoint, cal: &Calibration) -> Result<f64, CostError> {
    let regs = estimate_registers(p, cal) as f64;
    let aluts = estimate_aluts(p, cal)?;
    let family = AlmFamily::of(p);
    let fit = cal.alm_fit(family)?;
    Ok(fit.evaluate(regs, aluts))
}

pub fn estimate_fmax(p: &DesignPoint, cal: &Calibration) -> Result<f64, CostError> {
    let bits = p.structure()?.max_unregistered_bundle_bits;
    Ok(cal.fmax.evaluate(bits))
}

pub fn estimate(p: &DesignPoint, cal: &Calibration) -> Result<ResourceEstimate, CostError> {
    let counts = p.structure()?;
    let registers = estimate_registers(p, cal);
    let aluts = cal.alut.evaluate(counts.decode_terms);
    let alms = cal.alm_fit(AlmFamily::of(p))?.evaluate(registers as f64, aluts);
    Ok(ResourceEstimate {
        registers,
        alms,
        aluts,
        fmax_mhz: cal.fmax.evaluate(counts.max_unregistered_bundle_bits),
    })
}
