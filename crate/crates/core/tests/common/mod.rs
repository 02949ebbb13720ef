//! Random generators and reference oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::index::sample;
use rand::Rng;
use regmap_core::sim::{BusyWindow, ProgramScript, ScriptWrite, SlaveFragment};
use regmap_core::spec::{
    ArchChoice, BusGeometry, ClockDomain, RegisterMapSpec, SettingSpec, SlaveSpec, Topology,
};
use std::collections::BTreeMap;

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn random_registers<R: Rng>(rng: &mut R, offset_bits: u32, data_width: u32, max: usize) -> Vec<SettingSpec> {
    let window = 1usize << offset_bits;
    let count = rng.random_range(0..=max.min(window));
    let mut offsets: Vec<usize> = sample(rng, window, count).into_vec();
    offsets.sort_unstable();
    offsets
        .into_iter()
        .enumerate()
        .map(|(i, off)| {
            let width = rng.random_range(1..=data_width);
            SettingSpec {
                name: format!("r{i}_{off}"),
                offset: off as u64,
                width,
                reset_value: rng.next_u64() & mask(width),
            }
        })
        .collect()
}

/// A valid distributed spec with at least `domains` clock domains.
pub fn random_distributed_spec<R: Rng>(rng: &mut R, domains: usize, min_slaves: usize) -> RegisterMapSpec {
    let data_width = rng.random_range(1..=32);
    let select_bits = rng.random_range(1..=3u32);
    let offset_bits = rng.random_range(2..=6u32);
    let slots = 1usize << select_bits;
    let n_slaves = rng.random_range(min_slaves.min(slots)..=slots.min(4));
    let clock_domains: Vec<ClockDomain> = (0..domains)
        .map(|i| ClockDomain {
            name: if i == 0 { "cfg".into() } else { format!("d{i}") },
            period_ps: rng.random_range(3_000..=30_000),
        })
        .collect();
    let mut chosen = sample(rng, slots, n_slaves).into_vec();
    chosen.sort_unstable();
    let slaves = chosen
        .into_iter()
        .enumerate()
        .map(|(i, slot)| SlaveSpec {
            name: format!("s{i}"),
            clock_domain: clock_domains[rng.random_range(0..domains)].name.clone(),
            base_addr: (slot as u64) << offset_bits,
            registers: random_registers(rng, offset_bits, data_width, 12),
        })
        .collect();
    RegisterMapSpec {
        name: "rand".into(),
        bus: BusGeometry {
            data_width,
            addr_width: select_bits + offset_bits,
            slave_select_bits: select_bits,
        },
        clock_domains,
        slaves,
        architecture: ArchChoice {
            topology: Topology::Distributed,
            sync_length: rng.random_range(1..=3),
            global_depth: None,
            global_width: None,
        },
    }
}

/// Every mapped address of `spec`, found by scanning the slaves directly.
pub fn mapped_addresses(spec: &RegisterMapSpec) -> Vec<u64> {
    let mut out: Vec<u64> = spec
        .slaves
        .iter()
        .flat_map(|s| s.registers.iter().map(move |r| s.base_addr + r.offset))
        .collect();
    out.sort_unstable();
    out
}

/// `(slave, offset, width)` for `addr`, by linear search over the spec.
pub fn brute_decode(spec: &RegisterMapSpec, addr: u64) -> Option<(usize, u64, u32)> {
    let window = 1u64 << (spec.bus.addr_width - spec.bus.slave_select_bits);
    spec.slaves.iter().enumerate().find_map(|(i, s)| {
        if addr < s.base_addr || addr >= s.base_addr + window {
            return None;
        }
        s.registers
            .iter()
            .find(|r| r.offset == addr - s.base_addr)
            .map(|r| (i, r.offset, r.width))
    })
}

pub struct ScriptShape {
    pub max_writes: usize,
    /// Probability a write targets an arbitrary (possibly unmapped) address.
    pub wild_addr: f64,
    pub max_windows_per_slave: usize,
    pub max_window_cycles: u64,
}

impl Default for ScriptShape {
    fn default() -> Self {
        ScriptShape {
            max_writes: 200,
            wild_addr: 0.0,
            max_windows_per_slave: 4,
            max_window_cycles: 40,
        }
    }
}

pub fn random_script<R: Rng>(rng: &mut R, spec: &RegisterMapSpec, shape: &ScriptShape) -> ProgramScript {
    let mapped = mapped_addresses(spec);
    let period = spec.clock_domains[0].period_ps;
    let n = if mapped.is_empty() && shape.wild_addr == 0.0 {
        0
    } else {
        rng.random_range(0..=shape.max_writes)
    };
    let mut cycle = 0u64;
    let mut writes = Vec::with_capacity(n);
    for _ in 0..n {
        cycle += match rng.random_range(0..10) {
            0 => rng.random_range(5..50),
            1..=3 => 1,
            _ => 0,
        };
        let at_cycle = if rng.random_bool(0.05) {
            rng.random_range(0..=cycle)
        } else {
            cycle
        };
        let addr = if mapped.is_empty() || rng.random_bool(shape.wild_addr) {
            rng.next_u64() & mask(spec.bus.addr_width)
        } else {
            mapped[rng.random_range(0..mapped.len())]
        };
        writes.push(ScriptWrite {
            at_cycle,
            addr,
            data: rng.next_u64(),
        });
    }
    let horizon = (cycle + 10) * period * 2;
    let mut busy_windows = Vec::new();
    for s in &spec.slaves {
        for _ in 0..rng.random_range(0..=shape.max_windows_per_slave) {
            let start = rng.random_range(0..horizon);
            let len = rng.random_range(0..=shape.max_window_cycles) * period + rng.random_range(0..period);
            busy_windows.push(BusyWindow {
                slave: s.name.clone(),
                start_ps: start,
                end_ps: start + len,
            });
        }
    }
    ProgramScript {
        writes,
        busy_windows,
        swaps: vec![],
    }
}

/// Reset values with every mapped script write applied in issue order:
/// a stable sort by `at_cycle`, unmapped addresses dropped.
pub fn fold_oracle(spec: &RegisterMapSpec, script: &ProgramScript) -> BTreeMap<(usize, u64), u64> {
    let mut state: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for (i, s) in spec.slaves.iter().enumerate() {
        for r in &s.registers {
            state.insert((i, r.offset), r.reset_value & mask(r.width));
        }
    }
    let mut writes = script.writes.clone();
    writes.sort_by_key(|w| w.at_cycle);
    for w in writes {
        if let Some((slave, offset, width)) = brute_decode(spec, w.addr) {
            state.insert((slave, offset), w.data & mask(width));
        }
    }
    state
}

/// A fragment that fits slave `slave`'s window.
pub fn random_fragment<R: Rng>(rng: &mut R, spec: &RegisterMapSpec, max: usize) -> SlaveFragment {
    let offset_bits = spec.bus.addr_width - spec.bus.slave_select_bits;
    SlaveFragment {
        clock_domain: Some(spec.clock_domains[rng.random_range(0..spec.clock_domains.len())].name.clone()),
        registers: random_registers(rng, offset_bits, spec.bus.data_width, max),
    }
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Names of the golden-corpus specs, in file order.
pub fn golden_specs() -> Vec<(String, RegisterMapSpec)> {
    let dir = fixtures_dir().join("specs");
    let mut entries: Vec<_> = std::fs::read_dir(&dir)
        .expect("fixture specs")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let spec = regmap_core::spec::load_spec(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), spec)
        })
        .collect()
}

/// Everything the golden corpus pins for one spec: the HDL files and the
/// canonical model dump.
pub fn render_golden(spec: &RegisterMapSpec) -> BTreeMap<String, String> {
    let model = regmap_core::elaborate::elaborate(spec).expect("fixture elaborates");
    let mut files = regmap_core::emit::emit(&model, spec).expect("fixture emits");
    files.insert("model.txt".into(), model.canonical_dump());
    files
}

/// Compares (or with `UPDATE_GOLDEN=1` rewrites) every golden file.
/// Returns the number of files compared or a description of each mismatch.
pub fn check_goldens() -> Result<usize, Vec<String>> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut problems = Vec::new();
    let mut compared = 0;
    for (stem, spec) in golden_specs() {
        let dir = fixtures_dir().join("golden").join(&stem);
        let files = render_golden(&spec);
        if update {
            let _ = std::fs::remove_dir_all(&dir);
            std::fs::create_dir_all(&dir).unwrap();
            for (name, text) in &files {
                std::fs::write(dir.join(name), text).unwrap();
            }
        }
        let mut on_disk: Vec<String> = std::fs::read_dir(&dir)
            .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
            .unwrap_or_default();
        on_disk.sort();
        let produced: Vec<String> = files.keys().cloned().collect();
        if on_disk != produced {
            problems.push(format!("{stem}: file set {produced:?} != golden {on_disk:?}"));
            continue;
        }
        for (name, text) in &files {
            let golden = std::fs::read_to_string(dir.join(name)).unwrap();
            compared += 1;
            if &golden != text {
                let line = golden
                    .lines()
                    .zip(text.lines())
                    .position(|(a, b)| a != b)
                    .unwrap_or(golden.lines().count().min(text.lines().count()));
                problems.push(format!("{stem}/{name}: first difference at line {}", line + 1));
            }
        }
    }
    if problems.is_empty() {
        Ok(compared)
    } else {
        Err(problems)
    }
}
