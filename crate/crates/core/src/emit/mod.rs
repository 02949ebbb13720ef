//! SystemVerilog text for an elaborated design: one top-level file plus one
//! file per slave, and an optional self-checking testbench.
//!
//! Output is deterministic: UTF-8, LF line endings, four-space indent. The
//! header of every file names the register map and carries the SHA-256 of
//! the model's canonical dump.

mod names;
mod testbench;

pub use names::{sanitize, Namer, Names, SlaveNames, SLAVE_PORTS};
pub use testbench::emit_testbench;

use crate::elaborate::DesignModel;
use crate::spec::{low_mask, RegisterMapSpec, Topology};
use std::collections::BTreeMap;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("model `{model}` was not elaborated from spec `{spec}`")]
    ModelMismatch { model: String, spec: String },
    #[error("{0} is not supported here")]
    UnsupportedTopology(Topology),
    #[error("testbench: {0}")]
    Testbench(String),
}

/// File name to contents.
pub type EmittedFiles = BTreeMap<String, String>;

fn range(width: u64) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

fn lit(width: u32, value: u64) -> String {
    format!("{width}'h{:x}", value & low_mask(width))
}

fn header(out: &mut String, model: &DesignModel, spec: &RegisterMapSpec, what: &str) {
    let _ = writeln!(out, "// Generated by regmap from register map `{}`: {what}.", spec.name);
    let _ = writeln!(out, "// Topology: {}", model.topology);
    let _ = writeln!(out, "// Model sha256: {}", model.content_hash());
    out.push('\n');
}

fn port_list(out: &mut String, module: &str, ports: &[String]) {
    let _ = writeln!(out, "module {module} (");
    for (i, p) in ports.iter().enumerate() {
        let sep = if i + 1 == ports.len() { "" } else { "," };
        let _ = writeln!(out, "    {p}{sep}");
    }
    out.push_str(");\n");
}

fn check_pair(model: &DesignModel, spec: &RegisterMapSpec) -> Result<(), EmitError> {
    let same = model.name == spec.name
        && model.slaves.len() == spec.slaves.len()
        && model.slaves.iter().zip(&spec.slaves).all(|(m, s)| m.name == s.name)
        && model.layout.len() == spec.target_count();
    if same {
        Ok(())
    } else {
        Err(EmitError::ModelMismatch {
            model: model.name.clone(),
            spec: spec.name.clone(),
        })
    }
}

/// HDL for `model`, which must have been elaborated from `spec`.
pub fn emit(model: &DesignModel, spec: &RegisterMapSpec) -> Result<EmittedFiles, EmitError> {
    check_pair(model, spec)?;
    let names = Names::new(spec);
    let mut files = EmittedFiles::new();
    match model.topology {
        Topology::Distributed => {
            files.insert(format!("{}.sv", names.top), distributed_top(model, spec, &names));
            for i in 0..spec.slaves.len() {
                files.insert(format!("{}.sv", names.slaves[i].module), distributed_slave(model, spec, &names, i));
            }
        }
        _ => {
            files.insert(format!("{}.sv", names.top), global_top(model, spec, &names));
            for i in 0..spec.slaves.len() {
                files.insert(format!("{}.sv", names.slaves[i].module), global_slave(model, spec, &names, i));
            }
        }
    }
    Ok(files)
}

fn distributed_slave(model: &DesignModel, spec: &RegisterMapSpec, names: &Names, index: usize) -> String {
    let slave = &spec.slaves[index];
    let n = &names.slaves[index];
    let bus = spec.bus;
    let aw = u64::from(bus.addr_width);
    let dw = u64::from(bus.data_width);
    let ob = bus.offset_bits();
    let l = model.sync_length.max(1) as u64;

    let mut out = String::new();
    header(&mut out, model, spec, &format!("slave `{}`", slave.name));
    let mut ports = vec![
        "input  logic clk".to_string(),
        "input  logic rst".to_string(),
        format!("input  logic {}cfg_addr", range(aw)),
        format!("input  logic {}cfg_wdata", range(dw)),
        "input  logic cfg_write".to_string(),
        "input  logic cfg_sel".to_string(),
        "output logic ready".to_string(),
        "input  logic busy".to_string(),
    ];
    for (r, name) in slave.registers.iter().zip(&n.settings) {
        ports.push(format!("output logic {}{name}", range(u64::from(r.width))));
    }
    port_list(&mut out, &n.module, &ports);
    out.push('\n');

    for (r, name) in slave.registers.iter().zip(&n.settings) {
        let _ = writeln!(out, "    logic {}{name}_q;", range(u64::from(r.width)));
    }
    out.push_str("    logic ready_r;\n");
    let _ = writeln!(out, "    logic [{}:0] busy_sync;", l - 1);
    out.push('\n');

    out.push_str("    always_ff @(posedge clk or posedge rst) begin\n");
    out.push_str("        if (rst) begin\n");
    for (r, name) in slave.registers.iter().zip(&n.settings) {
        let _ = writeln!(out, "            {name}_q <= {};", lit(r.width, r.reset_value));
    }
    out.push_str("            ready_r <= 1'b1;\n");
    out.push_str("            busy_sync <= '0;\n");
    out.push_str("        end else begin\n");
    if l == 1 {
        out.push_str("            busy_sync <= busy;\n");
    } else {
        let _ = writeln!(out, "            busy_sync <= {{busy_sync[{}:0], busy}};", l - 2);
    }
    let _ = writeln!(out, "            ready_r <= ~busy_sync[{}];", l - 1);
    if !slave.registers.is_empty() {
        out.push_str("            if (cfg_write && cfg_sel && ready_r) begin\n");
        let _ = writeln!(out, "                case (cfg_addr[{}:0])", ob - 1);
        for (r, name) in slave.registers.iter().zip(&n.settings) {
            let _ = writeln!(
                out,
                "                    {ob}'d{}: {name}_q <= cfg_wdata[{}:0];",
                r.offset,
                r.width - 1
            );
        }
        out.push_str("                    default: ;\n");
        out.push_str("                endcase\n");
        out.push_str("            end\n");
    }
    out.push_str("        end\n");
    out.push_str("    end\n\n");

    out.push_str("    assign ready = ready_r;\n");
    for name in &n.settings {
        let _ = writeln!(out, "    assign {name} = {name}_q;");
    }
    out.push_str("\nendmodule\n");
    out
}

fn distributed_top(model: &DesignModel, spec: &RegisterMapSpec, names: &Names) -> String {
    let bus = spec.bus;
    let aw = u64::from(bus.addr_width);
    let dw = u64::from(bus.data_width);
    let ob = bus.offset_bits();
    let s = spec.slaves.len() as u64;

    let mut out = String::new();
    header(&mut out, model, spec, "top level");
    let mut ports = vec![
        "input  logic clk".to_string(),
        "input  logic rst".to_string(),
        format!("input  logic {}cfg_addr", range(aw)),
        format!("input  logic {}cfg_wdata", range(dw)),
        "input  logic cfg_write".to_string(),
        "output logic cfg_ready".to_string(),
    ];
    for n in &names.slaves {
        ports.push(format!("input  logic {}", n.busy_port));
    }
    for (slave, n) in spec.slaves.iter().zip(&names.slaves) {
        for (r, port) in slave.registers.iter().zip(&n.top_ports) {
            ports.push(format!("output logic {}{port}", range(u64::from(r.width))));
        }
    }
    port_list(&mut out, &names.top, &ports);
    out.push('\n');

    if s == 0 {
        out.push_str("    assign cfg_ready = 1'b0;\n\nendmodule\n");
        return out;
    }
    let _ = writeln!(out, "    logic [{}:0] cfg_sel;", s - 1);
    let _ = writeln!(out, "    logic [{}:0] ready;", s - 1);
    out.push('\n');

    out.push_str("    // slave select from the address bits above the word offset\n");
    out.push_str("    always_comb begin\n");
    out.push_str("        cfg_sel = '0;\n");
    let sel_bits = bus.addr_width - ob;
    if sel_bits == 0 {
        // a single slave owns the whole address space
        out.push_str("        cfg_sel[0] = 1'b1;\n");
    } else {
        let _ = writeln!(out, "        case (cfg_addr[{}:{ob}])", aw - 1);
        for (i, slave) in spec.slaves.iter().enumerate() {
            let _ = writeln!(out, "            {sel_bits}'d{}: cfg_sel[{i}] = 1'b1;", slave.base_addr >> ob);
        }
        out.push_str("            default: ;\n");
        out.push_str("        endcase\n");
    }
    out.push_str("    end\n\n");
    out.push_str("    assign cfg_ready = |(cfg_sel & ready);\n");

    for (i, n) in names.slaves.iter().enumerate() {
        out.push('\n');
        let mut conns = vec![
            ".clk(clk)".to_string(),
            ".rst(rst)".to_string(),
            ".cfg_addr(cfg_addr)".to_string(),
            ".cfg_wdata(cfg_wdata)".to_string(),
            ".cfg_write(cfg_write)".to_string(),
            format!(".cfg_sel(cfg_sel[{i}])"),
            format!(".ready(ready[{i}])"),
            format!(".busy({})", n.busy_port),
        ];
        for (local, port) in n.settings.iter().zip(&n.top_ports) {
            conns.push(format!(".{local}({port})"));
        }
        instance(&mut out, &n.module, &n.instance, &conns);
    }
    out.push_str("\nendmodule\n");
    out
}

fn instance(out: &mut String, module: &str, inst: &str, conns: &[String]) {
    let _ = writeln!(out, "    {module} {inst} (");
    for (i, c) in conns.iter().enumerate() {
        let sep = if i + 1 == conns.len() { "" } else { "," };
        let _ = writeln!(out, "        {c}{sep}");
    }
    out.push_str("    );\n");
}

/// First bit and width of slave `index`'s settings in the global memory.
fn slave_slice(model: &DesignModel, spec: &RegisterMapSpec, index: usize) -> Option<(u64, u64)> {
    let lo = model.layout.iter().filter(|s| s.slave == index).map(|s| s.bit_offset).min()?;
    Some((lo, spec.slaves[index].setting_bits()))
}

fn global_slave(model: &DesignModel, spec: &RegisterMapSpec, names: &Names, index: usize) -> String {
    let slave = &spec.slaves[index];
    let n = &names.slaves[index];
    let stages = model.stages;
    let bits = slave.setting_bits();
    let l = u64::from(model.sync_length.max(1));

    let mut out = String::new();
    header(&mut out, model, spec, &format!("slave `{}`", slave.name));
    let mut ports = vec!["input  logic clk".to_string(), "input  logic rst".to_string()];
    if bits > 0 {
        ports.push(format!("input  logic {}settings_in", range(bits)));
    }
    for (r, name) in slave.registers.iter().zip(&n.settings) {
        ports.push(format!("output logic {}{name}", range(u64::from(r.width))));
    }
    port_list(&mut out, &n.module, &ports);

    if bits > 0 {
        out.push('\n');
        let _ = writeln!(out, "    logic {}stage_out;", range(bits));
        if stages.cdc {
            let _ = writeln!(out, "    logic {}sync_stage [{l}];", range(bits));
        }
        if stages.dest_registers {
            for (r, name) in slave.registers.iter().zip(&n.settings) {
                let _ = writeln!(out, "    logic {}{name}_q;", range(u64::from(r.width)));
            }
        }
        out.push('\n');

        if stages.cdc {
            out.push_str("    always_ff @(posedge clk or posedge rst) begin\n");
            out.push_str("        if (rst) begin\n");
            let _ = writeln!(out, "            for (int i = 0; i < {l}; i++) sync_stage[i] <= '0;");
            out.push_str("        end else begin\n");
            out.push_str("            sync_stage[0] <= settings_in;\n");
            let _ = writeln!(out, "            for (int i = 1; i < {l}; i++) sync_stage[i] <= sync_stage[i - 1];");
            out.push_str("        end\n");
            out.push_str("    end\n\n");
            let _ = writeln!(out, "    assign stage_out = sync_stage[{}];", l - 1);
        } else {
            out.push_str("    assign stage_out = settings_in;\n");
        }

        let mut offset = 0u64;
        let slices: Vec<(u64, u32)> = slave
            .registers
            .iter()
            .map(|r| {
                let s = (offset, r.width);
                offset += u64::from(r.width);
                s
            })
            .collect();
        if stages.dest_registers {
            out.push('\n');
            out.push_str("    always_ff @(posedge clk or posedge rst) begin\n");
            out.push_str("        if (rst) begin\n");
            for (r, name) in slave.registers.iter().zip(&n.settings) {
                let _ = writeln!(out, "            {name}_q <= {};", lit(r.width, r.reset_value));
            }
            out.push_str("        end else begin\n");
            for ((lo, w), name) in slices.iter().zip(&n.settings) {
                let _ = writeln!(out, "            {name}_q <= stage_out[{lo} +: {w}];");
            }
            out.push_str("        end\n");
            out.push_str("    end\n");
        }
        out.push('\n');
        for ((lo, w), name) in slices.iter().zip(&n.settings) {
            if stages.dest_registers {
                let _ = writeln!(out, "    assign {name} = {name}_q;");
            } else {
                let _ = writeln!(out, "    assign {name} = stage_out[{lo} +: {w}];");
            }
        }
    }
    out.push_str("\nendmodule\n");
    out
}

/// Per memory row, the reset word as a hex literal, for rows that are not
/// all zero.
fn reset_rows(model: &DesignModel, spec: &RegisterMapSpec, width: u64) -> BTreeMap<u64, String> {
    let limbs = width.div_ceil(64) as usize;
    let mut rows: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for slot in &model.layout {
        let value = spec.slaves[slot.slave].registers[slot.setting].reset_value & low_mask(slot.width);
        for bit in 0..u64::from(slot.width) {
            if value >> bit & 1 == 1 {
                let flat = slot.bit_offset + bit;
                let (row, col) = (flat / width, flat % width);
                let word = rows.entry(row).or_insert_with(|| vec![0; limbs]);
                word[(col / 64) as usize] |= 1 << (col % 64);
            }
        }
    }
    rows.into_iter()
        .map(|(row, word)| {
            let digits = width.div_ceil(4) as usize;
            let mut hex: String = word.iter().rev().map(|l| format!("{l:016x}")).collect();
            hex = hex[hex.len() - digits..].to_string();
            let trimmed = hex.trim_start_matches('0');
            (row, format!("{width}'h{}", if trimmed.is_empty() { "0" } else { trimmed }))
        })
        .collect()
}

fn global_top(model: &DesignModel, spec: &RegisterMapSpec, names: &Names) -> String {
    let bus = spec.bus;
    let aw = u64::from(bus.addr_width);
    let dw = u64::from(bus.data_width);
    let depth = u64::from(spec.architecture.global_depth.unwrap_or(0));
    let width = u64::from(spec.architecture.global_width.unwrap_or(0));
    let lanes = width.div_ceil(dw);
    let stages = model.stages;
    let clocked = stages.cdc || stages.dest_registers;

    let mut used_domains: Vec<usize> = spec
        .slaves
        .iter()
        .filter_map(|s| spec.domain_index(&s.clock_domain))
        .filter(|&d| d != 0 && clocked)
        .collect();
    used_domains.sort_unstable();
    used_domains.dedup();

    let mut out = String::new();
    header(&mut out, model, spec, "top level");
    out.push_str("// Host address a writes lane a % LANES of memory row a / LANES.\n");
    for slot in &model.layout {
        let r = &spec.slaves[slot.slave].registers[slot.setting];
        let _ = writeln!(
            out,
            "// {}.{} -> memory bits [{}:{}]",
            spec.slaves[slot.slave].name,
            r.name,
            slot.bit_offset + u64::from(slot.width) - 1,
            slot.bit_offset
        );
    }
    if !model.layout.is_empty() {
        out.push('\n');
    }

    let mut ports = vec!["input  logic clk".to_string(), "input  logic rst".to_string()];
    for &d in &used_domains {
        ports.push(format!("input  logic {}", names.domain_clocks[d]));
    }
    ports.push(format!("input  logic {}cfg_addr", range(aw)));
    ports.push(format!("input  logic {}cfg_wdata", range(dw)));
    ports.push("input  logic cfg_write".to_string());
    for (slave, n) in spec.slaves.iter().zip(&names.slaves) {
        for (r, port) in slave.registers.iter().zip(&n.top_ports) {
            ports.push(format!("output logic {}{port}", range(u64::from(r.width))));
        }
    }
    port_list(&mut out, &names.top, &ports);
    out.push('\n');

    let _ = writeln!(out, "    localparam int DEPTH = {depth};");
    let _ = writeln!(out, "    localparam int WIDTH = {width};");
    let _ = writeln!(out, "    localparam int DW = {dw};");
    let _ = writeln!(out, "    localparam int LANES = {lanes};");
    out.push('\n');
    out.push_str("    logic [WIDTH-1:0] mem_q [DEPTH];\n");
    out.push_str("    logic [DEPTH*WIDTH-1:0] mem_flat;\n");
    if stages.output_registered {
        out.push_str("    logic [DEPTH*WIDTH-1:0] mem_out_q;\n");
    }
    out.push_str("    logic [DEPTH*WIDTH-1:0] settings_src;\n\n");

    out.push_str("    always_ff @(posedge clk or posedge rst) begin\n");
    out.push_str("        if (rst) begin\n");
    out.push_str("            for (int i = 0; i < DEPTH; i++) mem_q[i] <= '0;\n");
    for (row, value) in reset_rows(model, spec, width) {
        let _ = writeln!(out, "            mem_q[{row}] <= {value};");
    }
    out.push_str("        end else if (cfg_write && cfg_addr < DEPTH * LANES) begin\n");
    out.push_str("            mem_q[cfg_addr / LANES][(cfg_addr % LANES) * DW +: DW] <= cfg_wdata;\n");
    out.push_str("        end\n");
    out.push_str("    end\n\n");

    out.push_str("    always_comb begin\n");
    out.push_str("        for (int i = 0; i < DEPTH; i++) mem_flat[i * WIDTH +: WIDTH] = mem_q[i];\n");
    out.push_str("    end\n\n");

    if stages.output_registered {
        out.push_str("    always_ff @(posedge clk or posedge rst) begin\n");
        out.push_str("        if (rst) mem_out_q <= '0;\n");
        out.push_str("        else mem_out_q <= mem_flat;\n");
        out.push_str("    end\n\n");
        out.push_str("    assign settings_src = mem_out_q;\n");
    } else {
        out.push_str("    assign settings_src = mem_flat;\n");
    }

    for (i, (slave, n)) in spec.slaves.iter().zip(&names.slaves).enumerate() {
        out.push('\n');
        let clock = if clocked {
            let d = spec.domain_index(&slave.clock_domain).unwrap_or(0);
            names.domain_clocks[d].clone()
        } else {
            "clk".to_string()
        };
        let mut conns = vec![format!(".clk({clock})"), ".rst(rst)".to_string()];
        if let Some((lo, bits)) = slave_slice(model, spec, i).filter(|&(_, b)| b > 0) {
            conns.push(format!(".settings_in(settings_src[{lo} +: {bits}])"));
        }
        for (local, port) in n.settings.iter().zip(&n.top_ports) {
            conns.push(format!(".{local}({port})"));
        }
        instance(&mut out, &n.module, &n.instance, &conns);
    }
    out.push_str("\nendmodule\n");
    out
}
