use super::{estimate, Calibration, CostError, DesignPoint, ResourceEstimate};
use crate::spec::Topology;
use serde::Serialize;
use std::fmt;

pub const SWEEP_HEADER: &str = "topology,D,W,N_t,w,L,S,registers,alms,aluts,fmax_mhz";

/// Values per axis; the sweep visits their cartesian product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRanges {
    pub topologies: Vec<Topology>,
    pub depth: Vec<u32>,
    pub width: Vec<u32>,
    pub targets: Vec<u32>,
    pub target_width: Vec<u32>,
    pub sync_length: Vec<u32>,
    pub slaves: Vec<u32>,
    /// Stage flags forced on or off for every global point.
    pub output_registered: Option<bool>,
    pub cdc: Option<bool>,
    pub dest_registers: Option<bool>,
}

impl Default for SweepRanges {
    fn default() -> Self {
        let p = DesignPoint::new(Topology::Global);
        SweepRanges {
            topologies: vec![Topology::Global],
            depth: vec![p.depth],
            width: vec![p.width],
            targets: vec![p.targets],
            target_width: vec![p.target_width],
            sync_length: vec![p.sync_length],
            slaves: vec![p.slaves],
            output_registered: None,
            cdc: None,
            dest_registers: None,
        }
    }
}

/// `7`, or the inclusive range `26..226:40` (step defaults to 1).
pub fn parse_range(text: &str) -> Result<Vec<u32>, String> {
    let num = |s: &str| {
        let v = crate::spec::int::parse_int_literal(s.trim()).ok_or_else(|| format!("`{s}` is not a number"))?;
        u32::try_from(v).map_err(|_| format!("{v} is out of range"))
    };
    let Some((lo, rest)) = text.split_once("..") else {
        return Ok(vec![num(text)?]);
    };
    let (hi, step) = match rest.split_once(':') {
        Some((hi, step)) => (num(hi)?, num(step)?),
        None => (num(rest)?, 1),
    };
    let lo = num(lo)?;
    if step == 0 {
        return Err(format!("`{text}`: step must be positive"));
    }
    if hi < lo {
        return Err(format!("`{text}`: range end precedes start"));
    }
    Ok((lo..=hi).step_by(step as usize).collect())
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text.trim() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

impl SweepRanges {
    /// Parse `k=v,...` with keys `topology`, `D`, `W`, `N_t`, `w`, `L`, `S`
    /// and the flags `out`, `cdc`, `dest`. Numeric values may be ranges.
    /// `topology` may list several names separated by `|`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut r = SweepRanges::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("`{part}` is not key=value"))?;
            let v = v.trim();
            match k.trim() {
                "topology" => {
                    r.topologies = v.split('|').map(|t| t.trim().parse()).collect::<Result<_, _>>()?;
                }
                "D" => r.depth = parse_range(v)?,
                "W" => r.width = parse_range(v)?,
                "N_t" => r.targets = parse_range(v)?,
                "w" => r.target_width = parse_range(v)?,
                "L" => r.sync_length = parse_range(v)?,
                "S" => r.slaves = parse_range(v)?,
                "out" | "output_registered" => r.output_registered = Some(parse_bool(v)?),
                "cdc" => r.cdc = Some(parse_bool(v)?),
                "dest" | "dest_registers" => r.dest_registers = Some(parse_bool(v)?),
                other => return Err(format!("unknown key `{other}`")),
            }
        }
        Ok(r)
    }

    pub fn points(&self) -> Vec<DesignPoint> {
        let mut out = Vec::new();
        for &t in &self.topologies {
            for &d in &self.depth {
                for &w_g in &self.width {
                    for &n in &self.targets {
                        for &w in &self.target_width {
                            for &l in &self.sync_length {
                                for &s in &self.slaves {
                                    let mut p = DesignPoint {
                                        depth: d,
                                        width: w_g,
                                        targets: n,
                                        target_width: w,
                                        sync_length: l,
                                        slaves: s,
                                        ..DesignPoint::new(t)
                                    };
                                    if p.is_global() {
                                        if let Some(f) = self.output_registered {
                                            p.stages.output_registered = f;
                                        }
                                        if let Some(f) = self.cdc {
                                            p.stages.cdc = f;
                                        }
                                        if let Some(f) = self.dest_registers {
                                            p.stages.dest_registers = f;
                                        }
                                    }
                                    out.push(p);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// A single design point in `k=v,...` form; ranges are rejected.
pub fn parse_point(text: &str) -> Result<DesignPoint, String> {
    let points = SweepRanges::parse(text)?.points();
    match points[..] {
        [p] => Ok(p),
        _ => Err(format!("`{text}` describes {} points, expected one", points.len())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub point: DesignPoint,
    pub estimate: ResourceEstimate,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let p = &self.point;
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{},{},{},{:.1},{:.1},{:.2}",
            self.label,
            p.depth,
            p.width,
            p.targets,
            p.target_width,
            p.sync_length,
            p.slaves,
            e.registers,
            e.alms,
            e.aluts,
            e.fmax_mhz
        )
    }
}

pub fn sweep(ranges: &SweepRanges, cal: &Calibration) -> Result<Vec<SweepRow>, CostError> {
    ranges
        .points()
        .into_iter()
        .map(|point| {
            Ok(SweepRow {
                label: point.label(),
                estimate: estimate(&point, cal)?,
                point,
            })
        })
        .collect()
}

/// Sweep rows as CSV with [`SWEEP_HEADER`].
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Estimates of two points and the ratios `a / b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub a: SweepRow,
    pub b: SweepRow,
    pub registers: f64,
    pub alms: f64,
    pub aluts: f64,
    pub fmax_mhz: f64,
}

pub fn compare(a: &DesignPoint, b: &DesignPoint, cal: &Calibration) -> Result<CompareReport, CostError> {
    let ea = estimate(a, cal)?;
    let eb = estimate(b, cal)?;
    Ok(CompareReport {
        registers: ea.registers as f64 / eb.registers as f64,
        alms: ea.alms / eb.alms,
        aluts: ea.aluts / eb.aluts,
        fmax_mhz: ea.fmax_mhz / eb.fmax_mhz,
        a: SweepRow {
            label: a.label(),
            point: *a,
            estimate: ea,
        },
        b: SweepRow {
            label: b.label(),
            point: *b,
            estimate: eb,
        },
    })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (&self.a.estimate, &self.b.estimate);
        writeln!(f, "A: {}", self.a.label)?;
        writeln!(f, "B: {}", self.b.label)?;
        writeln!(f, "{:<10} {:>12} {:>12} {:>8}", "metric", "A", "B", "A/B")?;
        writeln!(f, "{:<10} {:>12} {:>12} {:>8.3}", "registers", a.registers, b.registers, self.registers)?;
        writeln!(f, "{:<10} {:>12.1} {:>12.1} {:>8.3}", "alms", a.alms, b.alms, self.alms)?;
        writeln!(f, "{:<10} {:>12.1} {:>12.1} {:>8.3}", "aluts", a.aluts, b.aluts, self.aluts)?;
        writeln!(f, "{:<10} {:>12.2} {:>12.2} {:>8.3}", "fmax_mhz", a.fmax_mhz, b.fmax_mhz, self.fmax_mhz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("26..226:40").unwrap(), vec![26, 66, 106, 146, 186, 226]);
        assert_eq!(parse_range("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_range("0x10").unwrap(), vec![16]);
        assert!(parse_range("5..1").is_err());
        assert!(parse_range("1..5:0").is_err());
    }

    #[test]
    fn points() {
        let p = parse_point("topology=global,D=128,W=512,N_t=0,out=1").unwrap();
        assert_eq!(p.depth, 128);
        assert!(p.stages.output_registered);
        assert_eq!(p.label(), "global_registered");
        assert!(parse_point("topology=global,N_t=1..4").is_err());
        assert!(parse_point("bogus=1").is_err());
        let r = SweepRanges::parse("topology=global|distributed,S=1..4").unwrap();
        assert_eq!(r.points().len(), 8);
    }
}
