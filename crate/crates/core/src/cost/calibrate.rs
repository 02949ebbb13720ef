use super::{estimate_registers, CostError, DesignPoint};
use crate::spec::{GlobalStages, Topology};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Measured resources of one corpus design. Any metric may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measured {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registers: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aluts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmax_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPoint {
    pub label: String,
    pub point: DesignPoint,
    pub measured: Measured,
}

/// ALMs pack differently for a bare memory than for a design with settings
/// consumers, so each regime gets its own fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlmFamily {
    /// Global memory with no settings targets.
    MemoryOnly,
    WithTargets,
}

impl AlmFamily {
    pub fn of(p: &DesignPoint) -> Self {
        if p.is_global() && p.targets == 0 {
            AlmFamily::MemoryOnly
        } else {
            AlmFamily::WithTargets
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AlmFamily::MemoryOnly => "memory_only",
            AlmFamily::WithTargets => "with_targets",
        }
    }
}

/// `alms = a * registers + b * aluts + c`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AlmFit {
    pub fn evaluate(&self, registers: f64, aluts: f64) -> f64 {
        self.a * registers + self.b * aluts + self.c
    }
}

/// `aluts = per_decode_term * decode_terms + intercept`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlutFit {
    pub per_decode_term: f64,
    pub intercept: f64,
}

impl AlutFit {
    pub fn evaluate(&self, decode_terms: u64) -> f64 {
        self.per_decode_term * decode_terms as f64 + self.intercept
    }
}

/// `fmax = scale_mhz * (1 + bits)^-exponent`, where `bits` is the widest
/// bundle without a register at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmaxFit {
    pub scale_mhz: f64,
    pub exponent: f64,
}

impl FmaxFit {
    pub fn evaluate(&self, bits: u64) -> f64 {
        self.scale_mhz * (1.0 + bits as f64).powf(-self.exponent)
    }
}

/// Measured minus estimated, per metric present in the corpus point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residual {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registers: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aluts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmax_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub c_global: i64,
    pub c_distributed_per_slave: i64,
    pub alm: BTreeMap<AlmFamily, AlmFit>,
    pub alut: AlutFit,
    pub fmax: FmaxFit,
    pub corpus: Vec<CorpusPoint>,
    pub residuals: Vec<Residual>,
}

const SHIPPED: &str = include_str!("../../data/default_calibration.json");

impl Calibration {
    pub fn alm_fit(&self, family: AlmFamily) -> Result<&AlmFit, CostError> {
        self.alm
            .get(&family)
            .ok_or_else(|| CostError::Uncalibrated(family.as_str().into()))
    }

    /// The calibration bundled with the crate, fitted to [`default_corpus`].
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED).expect("bundled calibration parses")
    }

    pub fn from_json(text: &str) -> Result<Self, crate::spec::ParseError> {
        crate::spec::parse_json(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("calibration serializes");
        s.push('\n');
        s
    }
}

/// Solve `min |x * beta - y|` through the SVD; errors unless `x` has full
/// column rank.
pub fn least_squares(fit: &str, x: DMatrix<f64>, y: DVector<f64>) -> Result<DVector<f64>, CostError> {
    let (rows, cols) = x.shape();
    let deficient = || CostError::RankDeficient {
        fit: fit.into(),
        rows,
        cols,
    };
    if rows < cols || cols == 0 {
        return Err(deficient());
    }
    let svd = x.svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = max_sv * 1e-10 * rows.max(cols) as f64;
    if max_sv == 0.0 || svd.rank(eps) < cols {
        return Err(deficient());
    }
    svd.solve(&y, eps).map_err(|e| CostError::BadFit(format!("{fit}: {e}")))
}

fn fit_rows<F: Fn(&CorpusPoint) -> Option<(Vec<f64>, f64)>>(
    name: &str,
    cols: usize,
    corpus: &[CorpusPoint],
    row: F,
) -> Result<DVector<f64>, CostError> {
    let rows: Vec<(Vec<f64>, f64)> = corpus.iter().filter_map(row).collect();
    let x = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r].0[c]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    least_squares(name, x, y)
}

/// Fit every model parameter to `corpus`.
///
/// Order matters: the register constants come first, so points that lack a
/// register measurement can use the register model as their feature; the
/// ALUT fit likewise feeds the ALM fits.
pub fn calibrate(corpus: &[CorpusPoint]) -> Result<Calibration, CostError> {
    for c in corpus {
        c.point.check()?;
    }
    let measured_offset = |c: &CorpusPoint| {
        c.measured
            .registers
            .map(|r| r as f64 - super::structural_registers(&c.point) as f64)
    };
    let g = fit_rows("c_global", 1, corpus, |c| {
        (c.point.is_global()).then(|| measured_offset(c)).flatten().map(|y| (vec![1.0], y))
    })?;
    // distributed: measured - S*N_t*w = S * c_dist
    let d = fit_rows("c_distributed_per_slave", 1, corpus, |c| {
        let p = &c.point;
        if p.is_global() {
            return None;
        }
        let r = c.measured.registers? as f64;
        Some((vec![f64::from(p.slaves)], r - f64::from(p.slaves) * p.target_bits() as f64))
    })?;

    let mut cal = Calibration {
        c_global: g[0].round() as i64,
        c_distributed_per_slave: d[0].round() as i64,
        alm: BTreeMap::new(),
        alut: AlutFit {
            per_decode_term: 0.0,
            intercept: 0.0,
        },
        fmax: FmaxFit {
            scale_mhz: 0.0,
            exponent: 0.0,
        },
        corpus: corpus.to_vec(),
        residuals: Vec::new(),
    };

    let structure: Vec<crate::elaborate::StructuralCounts> =
        corpus.iter().map(|c| c.point.structure()).collect::<Result<_, _>>()?;
    let find = |c: &CorpusPoint| {
        let i = corpus.iter().position(|p| p.label == c.label && p.point == c.point);
        structure[i.expect("member of the corpus")]
    };

    let alut = fit_rows("alut", 2, corpus, |c| {
        c.measured.aluts.map(|y| (vec![find(c).decode_terms as f64, 1.0], y))
    })?;
    cal.alut = AlutFit {
        per_decode_term: alut[0],
        intercept: alut[1],
    };

    let regs_of = |c: &CorpusPoint, cal: &Calibration| {
        c.measured
            .registers
            .map(|r| r as f64)
            .unwrap_or_else(|| estimate_registers(&c.point, cal) as f64)
    };
    let aluts_of =
        |c: &CorpusPoint, cal: &Calibration| c.measured.aluts.unwrap_or_else(|| cal.alut.evaluate(find(c).decode_terms));

    for family in [AlmFamily::MemoryOnly, AlmFamily::WithTargets] {
        let members: Vec<CorpusPoint> = corpus
            .iter()
            .filter(|c| c.measured.alms.is_some() && AlmFamily::of(&c.point) == family)
            .cloned()
            .collect();
        if members.is_empty() {
            continue;
        }
        let name = format!("alm/{}", family.as_str());
        let fit = match family {
            // a memory has no decode-heavy consumers to separate from its
            // register count, so the ALUT column is replaced by an intercept
            AlmFamily::MemoryOnly => {
                let v = fit_rows(&name, 2, &members, |c| Some((vec![regs_of(c, &cal), 1.0], c.measured.alms?)))?;
                AlmFit {
                    a: v[0],
                    b: 0.0,
                    c: v[1],
                }
            }
            AlmFamily::WithTargets => {
                let v = fit_rows(&name, 2, &members, |c| {
                    Some((vec![regs_of(c, &cal), aluts_of(c, &cal)], c.measured.alms?))
                })?;
                AlmFit {
                    a: v[0],
                    b: v[1],
                    c: 0.0,
                }
            }
        };
        cal.alm.insert(family, fit);
    }

    // ln fmax = ln scale - exponent * ln(1 + bits)
    let f = fit_rows("fmax", 2, corpus, |c| {
        let mhz = c.measured.fmax_mhz?;
        let bits = find(c).max_unregistered_bundle_bits as f64;
        Some((vec![1.0, -(1.0 + bits).ln()], mhz.ln()))
    })?;
    if f[1] <= 0.0 {
        return Err(CostError::BadFit(format!(
            "fmax: fitted exponent {:.4} does not decrease with bundle width",
            f[1]
        )));
    }
    cal.fmax = FmaxFit {
        scale_mhz: f[0].exp(),
        exponent: f[1],
    };

    cal.residuals = corpus
        .iter()
        .map(|c| {
            let s = find(c);
            let regs = estimate_registers(&c.point, &cal);
            let aluts = cal.alut.evaluate(s.decode_terms);
            let alms = cal.alm.get(&AlmFamily::of(&c.point)).map(|f| f.evaluate(regs as f64, aluts));
            Residual {
                label: c.label.clone(),
                registers: c.measured.registers.map(|m| m as i64 - regs as i64),
                alms: c.measured.alms.zip(alms).map(|(m, e)| m - e),
                aluts: c.measured.aluts.map(|m| m - aluts),
                fmax_mhz: c.measured.fmax_mhz.map(|m| m - cal.fmax.evaluate(s.max_unregistered_bundle_bits)),
            }
        })
        .collect();
    Ok(cal)
}

/// The measured designs behind the shipped calibration.
///
/// The three 226-setting points are full measurements of a 256 x 32 global
/// memory (with and without routing stages) and a one-slave distributed
/// bus. The two 128 x 512 memory-only points carry ALMs only: the output
/// register adds 10,292.6 ALMs, about 40 % over the unregistered memory.
pub fn default_corpus() -> Vec<CorpusPoint> {
    let targets = |topology: Topology, stages: GlobalStages| DesignPoint {
        stages,
        depth: 256,
        width: 32,
        targets: 226,
        target_width: 32,
        sync_length: 2,
        slaves: 1,
        ..DesignPoint::new(topology)
    };
    let memory = |topology: Topology| DesignPoint {
        depth: 128,
        width: 512,
        targets: 0,
        ..DesignPoint::new(topology)
    };
    let extra_alms = 10_292.6;
    let base_alms = extra_alms / 0.4;
    vec![
        CorpusPoint {
            label: "global_cdc_dest 256x32, 226 x 32-bit targets".into(),
            point: targets(Topology::GlobalCdcDest, Topology::GlobalCdcDest.stages()),
            measured: Measured {
                registers: Some(38_146),
                alms: Some(10_099.1),
                aluts: Some(1_925.0),
                fmax_mhz: Some(140.0),
            },
        },
        CorpusPoint {
            label: "global 256x32, 226 x 32-bit targets".into(),
            point: targets(Topology::Global, GlobalStages::default()),
            measured: Measured {
                registers: Some(8_258),
                alms: Some(2_710.5),
                aluts: Some(1_913.0),
                fmax_mhz: None,
            },
        },
        CorpusPoint {
            label: "distributed S=1, 226 x 32-bit targets".into(),
            point: DesignPoint {
                targets: 226,
                ..DesignPoint::new(Topology::Distributed)
            },
            measured: Measured {
                registers: Some(7_499),
                alms: Some(2_556.0),
                aluts: Some(1_887.0),
                fmax_mhz: Some(210.0),
            },
        },
        CorpusPoint {
            label: "global 128x512 memory only".into(),
            point: memory(Topology::Global),
            measured: Measured {
                alms: Some(base_alms),
                ..Default::default()
            },
        },
        CorpusPoint {
            label: "global_registered 128x512 memory only".into(),
            point: memory(Topology::GlobalRegistered),
            measured: Measured {
                alms: Some(base_alms + extra_alms),
                ..Default::default()
            },
        },
    ]
}
