//! Self-checking testbench for the distributed topology.
//!
//! The script is first run through the simulator; the testbench then drives
//! the same writes and busy windows against the emitted top level and
//! compares the final settings with the simulator's values.

use super::{lit, range, EmitError, Names};
use crate::elaborate::DesignModel;
use crate::protocol::Decoder;
use crate::sim::{ProgramScript, SimConfig, Simulator, TraceKind};
use crate::spec::{RegisterMapSpec, Topology};
use std::collections::BTreeSet;
use std::fmt::Write;

pub fn emit_testbench(model: &DesignModel, spec: &RegisterMapSpec, script: &ProgramScript) -> Result<String, EmitError> {
    super::check_pair(model, spec)?;
    if model.topology != Topology::Distributed {
        return Err(EmitError::UnsupportedTopology(model.topology));
    }
    if !script.swaps.is_empty() {
        return Err(EmitError::Testbench("module swaps cannot be expressed in a static testbench".into()));
    }
    let mut sim = Simulator::new(spec, SimConfig::default()).map_err(|e| EmitError::Testbench(e.to_string()))?;
    sim.load(script).map_err(|e| EmitError::Testbench(e.to_string()))?;
    // every window is finite and there is no timeout, so this terminates
    sim.run_until_idle(u64::MAX);

    let names = Names::new(spec);
    let decoder = Decoder::new(spec);
    let bus = spec.bus;
    let period = spec.clock_domains[0].period_ps;

    let mut writes = script.writes.clone();
    writes.sort_by_key(|w| w.at_cycle);
    let mut accepted = sim.trace().of_kind(TraceKind::WriteAccepted).map(|e| e.time_ps);

    let mut out = String::new();
    let _ = writeln!(out, "// Generated by regmap from register map `{}`: testbench.", spec.name);
    let _ = writeln!(out, "// Model sha256: {}", model.content_hash());
    let _ = writeln!(out, "// Expected values come from a reference simulation of the same script.");
    out.push('\n');
    out.push_str("`timescale 1ps/1fs\n\n");
    let _ = writeln!(out, "module {}_tb;", names.top.trim_end_matches("_top"));
    let _ = writeln!(out, "    localparam realtime PERIOD = {period}.0;");
    out.push('\n');
    out.push_str("    logic clk = 1'b1;\n");
    out.push_str("    logic rst = 1'b1;\n");
    let _ = writeln!(out, "    logic {}cfg_addr = '0;", range(u64::from(bus.addr_width)));
    let _ = writeln!(out, "    logic {}cfg_wdata = '0;", range(u64::from(bus.data_width)));
    out.push_str("    logic cfg_write = 1'b0;\n");
    out.push_str("    logic cfg_ready;\n");
    for n in &names.slaves {
        let _ = writeln!(out, "    logic {} = 1'b0;", n.busy_port);
    }
    for (slave, n) in spec.slaves.iter().zip(&names.slaves) {
        for (r, port) in slave.registers.iter().zip(&n.top_ports) {
            let _ = writeln!(out, "    logic {}{port};", range(u64::from(r.width)));
        }
    }
    out.push_str("    int unsigned cycle = 0;\n");
    out.push_str("    int errors = 0;\n\n");

    out.push_str("    always #(PERIOD / 2) clk = ~clk;\n");
    out.push_str("    always @(posedge clk) cycle <= cycle + 1;\n\n");

    let mut conns = vec![
        ".clk(clk)".to_string(),
        ".rst(rst)".to_string(),
        ".cfg_addr(cfg_addr)".to_string(),
        ".cfg_wdata(cfg_wdata)".to_string(),
        ".cfg_write(cfg_write)".to_string(),
        ".cfg_ready(cfg_ready)".to_string(),
    ];
    for n in &names.slaves {
        conns.push(format!(".{0}({0})", n.busy_port));
    }
    for n in &names.slaves {
        for port in &n.top_ports {
            conns.push(format!(".{port}({port})"));
        }
    }
    super::instance(&mut out, &names.top, "dut", &conns);
    out.push('\n');

    for (i, n) in names.slaves.iter().enumerate() {
        let mut windows: Vec<(u64, u64)> = script
            .busy_windows
            .iter()
            .filter(|w| spec.slave_index(&w.slave) == Some(i) && w.end_ps > w.start_ps)
            .map(|w| (w.start_ps, w.end_ps))
            .collect();
        if windows.is_empty() {
            continue;
        }
        windows.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (a, b) in windows {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let _ = writeln!(out, "    // busy windows of `{}`", spec.slaves[i].name);
        out.push_str("    initial begin\n");
        let mut now = 0;
        for (a, b) in merged {
            let _ = writeln!(out, "        #{} {} = 1'b1;", a - now, n.busy_port);
            let _ = writeln!(out, "        #{} {} = 1'b0;", b - a, n.busy_port);
            now = b;
        }
        out.push_str("    end\n\n");
    }

    let _ = writeln!(
        out,
        "    task automatic bus_write(input int unsigned at_cycle, input logic {}addr, input logic {}data);",
        range(u64::from(bus.addr_width)),
        range(u64::from(bus.data_width))
    );
    out.push_str("        while (cycle < at_cycle) @(negedge clk);\n");
    out.push_str("        cfg_addr = addr;\n");
    out.push_str("        cfg_wdata = data;\n");
    out.push_str("        cfg_write = 1'b1;\n");
    out.push_str("        // hold the write until the addressed slave reports Ready\n");
    out.push_str("        while (!cfg_ready) @(negedge clk);\n");
    out.push_str("        @(negedge clk);\n");
    out.push_str("        cfg_write = 1'b0;\n");
    out.push_str("    endtask\n\n");

    out.push_str("    initial begin\n");
    out.push_str("        #1 rst = 1'b0;\n");
    let mut written: BTreeSet<u64> = BTreeSet::new();
    for w in &writes {
        let addr = lit(bus.addr_width, w.addr);
        let data = lit(bus.data_width, w.data);
        if decoder.decode(w.addr).is_none() {
            let _ = writeln!(out, "        // skipped: no settings word at {addr}");
            continue;
        }
        written.insert(w.addr);
        match accepted.next() {
            Some(t) => {
                let _ = writeln!(out, "        bus_write({}, {addr}, {data}); // accepted at {t} ps", w.at_cycle);
            }
            None => {
                let _ = writeln!(out, "        bus_write({}, {addr}, {data});", w.at_cycle);
            }
        }
    }
    out.push_str("        repeat (2) @(negedge clk);\n\n");

    // Written words if any were written, otherwise every word at reset.
    for (si, (slave, n)) in spec.slaves.iter().zip(&names.slaves).enumerate() {
        for (r, port) in slave.registers.iter().zip(&n.top_ports) {
            let addr = slave.base_addr + r.offset;
            if !written.is_empty() && !written.contains(&addr) {
                continue;
            }
            let expected = sim.backdoor_read(si, r.offset).expect("word exists");
            let value = lit(r.width, expected);
            let _ = writeln!(
                out,
                "        if ({port} !== {value}) begin $error(\"{}.{}: got %h, expected %h\", {port}, {value}); errors++; end",
                slave.name, r.name
            );
        }
    }
    out.push('\n');
    out.push_str("        if (errors == 0) $display(\"PASS\");\n");
    out.push_str("        else $display(\"FAIL: %0d mismatches\", errors);\n");
    out.push_str("        $finish;\n");
    out.push_str("    end\n\nendmodule\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::sim::{BusyWindow, ScriptWrite};
    use crate::spec::parse_spec;

    fn spec() -> RegisterMapSpec {
        parse_spec(
            r#"{"name": "tb", "bus": {"data_width": 16, "addr_width": 8, "slave_select_bits": 2},
                "clock_domains": [{"name": "cfg", "period_ps": 10000}, {"name": "dsp", "period_ps": 7000}],
                "slaves": [{"name": "a", "clock_domain": "dsp", "base_addr": 0, "registers": [
                    {"name": "x", "offset": 0, "width": 16, "reset_value": 5},
                    {"name": "y", "offset": 1, "width": 8}]}],
                "architecture": {"topology": "distributed"}}"#,
        )
        .unwrap()
    }

    fn assertions(tb: &str) -> usize {
        tb.lines().filter(|l| l.contains("$error")).count()
    }

    #[test]
    fn empty_script_checks_reset_values() {
        let s = spec();
        let tb = emit_testbench(&elaborate(&s).unwrap(), &s, &ProgramScript::default()).unwrap();
        assert_eq!(assertions(&tb), 2);
        assert!(tb.contains("if (a_x !== 16'h5)"));
    }

    #[test]
    fn one_write_one_assertion() {
        let s = spec();
        let script = ProgramScript {
            writes: vec![ScriptWrite {
                at_cycle: 20,
                addr: 1,
                data: 0x1FF,
            }],
            busy_windows: vec![BusyWindow {
                slave: "a".into(),
                start_ps: 0,
                end_ps: 500_000,
            }],
            swaps: vec![],
        };
        let tb = emit_testbench(&elaborate(&s).unwrap(), &s, &script).unwrap();
        assert_eq!(assertions(&tb), 1);
        assert!(tb.contains("if (a_y !== 8'hff)"));
        let line = tb.lines().find(|l| l.contains("bus_write(20")).unwrap();
        let t: u64 = line.split("accepted at ").nth(1).unwrap().trim_end_matches(" ps").parse().unwrap();
        assert!(t >= 500_000);
        assert!(tb.contains("#500000 a_busy = 1'b0;"));
    }
}
