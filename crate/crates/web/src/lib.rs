//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: estimating one design point, sweeping a
//! parameter for the cost curves, and simulating a programming script.
//! Everything crosses the boundary as JSON text.

use regmap_core::cost::{self, Calibration, DesignPoint, SweepRanges};
use regmap_core::sim::{check_coherence, parse_script, violation_count, SimConfig, Simulator, TraceKind, Violation};
use regmap_core::spec::load_spec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Events beyond this many are counted but not returned to the page.
pub const TRACE_LIMIT: usize = 2_000;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_spec() -> String {
    include_str!("../../../samples/radio.json").to_string()
}

#[wasm_bindgen]
pub fn sample_script() -> String {
    include_str!("../../../samples/program.json").to_string()
}

/// `point` uses the CLI syntax, e.g. `topology=distributed,N_t=100`.
#[wasm_bindgen]
pub fn estimate_point(point: &str) -> Result<String, JsValue> {
    js(estimate_json(point))
}

#[wasm_bindgen]
pub fn sweep_points(ranges: &str) -> Result<String, JsValue> {
    js(sweep_json(ranges))
}

#[wasm_bindgen]
pub fn simulate(spec: &str, script: &str, fault_mode: bool) -> Result<String, JsValue> {
    js(simulate_json(spec, script, fault_mode))
}

#[derive(Serialize)]
struct EstimateOut {
    label: String,
    point: DesignPoint,
    registers: u64,
    alms: f64,
    aluts: f64,
    fmax_mhz: f64,
    flipflops: u64,
    decode_terms: u64,
    bundle_bits: u64,
}

fn estimate_one(p: &DesignPoint, cal: &Calibration) -> Result<EstimateOut, String> {
    let e = cost::estimate(p, cal).map_err(|e| e.to_string())?;
    let c = p.structure().map_err(|e| e.to_string())?;
    Ok(EstimateOut {
        label: p.label(),
        point: *p,
        registers: e.registers,
        alms: e.alms,
        aluts: e.aluts,
        fmax_mhz: e.fmax_mhz,
        flipflops: c.flipflops,
        decode_terms: c.decode_terms,
        bundle_bits: c.max_unregistered_bundle_bits,
    })
}

pub fn estimate_json(point: &str) -> Result<String, String> {
    let p = cost::parse_point(point)?;
    let out = estimate_one(&p, &Calibration::shipped())?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Rows for every point of the grid. Points that do not fit (for example
/// more targets than a small global memory holds) are skipped rather than
/// failing the whole curve.
pub fn sweep_json(ranges: &str) -> Result<String, String> {
    let ranges = SweepRanges::parse(ranges)?;
    let cal = Calibration::shipped();
    let rows: Vec<EstimateOut> = ranges
        .points()
        .iter()
        .filter(|p| p.check().is_ok())
        .map(|p| estimate_one(p, &cal))
        .collect::<Result<_, _>>()?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

// JavaScript numbers stop being exact above 2^53, so words travel as hex.
fn hex(v: u64) -> String {
    format!("0x{v:x}")
}

#[derive(Serialize)]
struct Setting {
    slave: String,
    name: String,
    addr: String,
    value: String,
}

#[derive(Serialize)]
struct Event {
    time_ps: u64,
    kind: TraceKind,
    slave: Option<usize>,
    addr: Option<String>,
    data: Option<String>,
}

#[derive(Serialize)]
struct SimOut {
    violations: usize,
    /// What the coherence checker found; simulator-logged problems are in `events`.
    findings: Vec<Violation>,
    end_ps: u64,
    trace_hash: String,
    slaves: Vec<String>,
    settings: Vec<Setting>,
    events: Vec<Event>,
    events_total: usize,
}

pub fn simulate_json(spec: &str, script: &str, fault_mode: bool) -> Result<String, String> {
    let spec = load_spec(spec).map_err(|e| format!("spec: {e}"))?;
    let script = parse_script(script).map_err(|e| format!("script: {e}"))?;
    let config = SimConfig {
        fault_mode,
        timeout_cycles: Some(100_000),
    };
    let mut sim = Simulator::new(&spec, config).map_err(|e| e.to_string())?;
    sim.load(&script).map_err(|e| e.to_string())?;
    sim.run_until_idle(u64::MAX);

    // swaps may have replaced slave contents, so read names from the live spec
    let live = sim.spec();
    let mut settings = Vec::new();
    for (i, s) in live.slaves.iter().enumerate() {
        for r in &s.registers {
            settings.push(Setting {
                slave: s.name.clone(),
                name: r.name.clone(),
                addr: hex(s.base_addr + r.offset),
                value: hex(sim.backdoor_read(i, r.offset).map_err(|e| e.to_string())?),
            });
        }
    }
    let trace = sim.trace();
    let out = SimOut {
        violations: violation_count(trace),
        findings: check_coherence(trace),
        end_ps: sim.time_ps(),
        trace_hash: trace.hash(),
        slaves: live.slaves.iter().map(|s| s.name.clone()).collect(),
        settings,
        events: trace
            .events
            .iter()
            .take(TRACE_LIMIT)
            .map(|e| Event {
                time_ps: e.time_ps,
                kind: e.kind,
                slave: e.slave,
                // violation events carry their code in `data`
                addr: e.addr.map(hex),
                data: e.data.map(|d| if e.kind == TraceKind::Violation { d.to_string() } else { hex(d) }),
            })
            .collect(),
        events_total: trace.events.len(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}
