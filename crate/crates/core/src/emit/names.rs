//! Identifier sanitation and collision handling.

use crate::spec::RegisterMapSpec;
use std::collections::BTreeSet;

const KEYWORDS: &[&str] = &[
    "accept_on", "alias", "always", "always_comb", "always_ff", "always_latch", "and", "assert", "assign", "assume",
    "automatic", "before", "begin", "bind", "bins", "binsof", "bit", "break", "buf", "bufif0", "bufif1", "byte",
    "case", "casex", "casez", "cell", "chandle", "checker", "class", "clocking", "cmos", "config", "const",
    "constraint", "context", "continue", "cover", "covergroup", "coverpoint", "cross", "deassign", "default",
    "defparam", "design", "disable", "dist", "do", "edge", "else", "end", "endcase", "endchecker", "endclass",
    "endclocking", "endconfig", "endfunction", "endgenerate", "endgroup", "endinterface", "endmodule",
    "endpackage", "endprimitive", "endprogram", "endproperty", "endsequence", "endspecify", "endtable", "endtask",
    "enum", "event", "eventually", "expect", "export", "extends", "extern", "final", "first_match", "for", "force",
    "foreach", "forever", "fork", "forkjoin", "function", "generate", "genvar", "global", "highz0", "highz1", "if",
    "iff", "ifnone", "ignore_bins", "illegal_bins", "implements", "implies", "import", "incdir", "include",
    "initial", "inout", "input", "inside", "instance", "int", "integer", "interconnect", "interface", "intersect",
    "join", "join_any", "join_none", "large", "let", "liblist", "library", "local", "localparam", "logic",
    "longint", "macromodule", "matches", "medium", "modport", "module", "nand", "negedge", "nettype", "new",
    "nexttime", "nmos", "nor", "noshowcancelled", "not", "notif0", "notif1", "null", "or", "output", "package",
    "packed", "parameter", "pmos", "posedge", "primitive", "priority", "program", "property", "protected", "pull0",
    "pull1", "pulldown", "pullup", "pulsestyle_ondetect", "pulsestyle_onevent", "pure", "rand", "randc",
    "randcase", "randsequence", "rcmos", "real", "realtime", "ref", "reg", "reject_on", "release", "repeat",
    "restrict", "return", "rnmos", "rpmos", "rtran", "rtranif0", "rtranif1", "s_always", "s_eventually",
    "s_nexttime", "s_until", "s_until_with", "scalared", "sequence", "shortint", "shortreal", "showcancelled",
    "signed", "small", "soft", "solve", "specify", "specparam", "static", "string", "strong", "strong0",
    "strong1", "struct", "super", "supply0", "supply1", "sync_accept_on", "sync_reject_on", "table", "tagged",
    "task", "this", "throughout", "time", "timeprecision", "timeunit", "tran", "tranif0", "tranif1", "tri",
    "tri0", "tri1", "triand", "trior", "trireg", "type", "typedef", "union", "unique", "unique0", "unsigned",
    "until", "until_with", "untyped", "use", "uwire", "var", "vectored", "virtual", "void", "wait", "wait_order",
    "wand", "weak", "weak0", "weak1", "while", "wildcard", "wire", "with", "within", "wor", "xnor", "xor",
];

/// Lowercase `name` into `[a-z0-9_]`. A leading digit gets an `n` prefix
/// and SystemVerilog keywords a trailing underscore.
pub fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| match c.to_ascii_lowercase() {
            c @ ('a'..='z' | '0'..='9' | '_') => c,
            _ => '_',
        })
        .collect();
    if s.is_empty() {
        s.push('x');
    }
    if s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'n');
    }
    if KEYWORDS.contains(&s.as_str()) {
        s.push('_');
    }
    s
}

/// Hands out unique identifiers within one scope. A name that is taken gets
/// `_1`, `_2`, ... in request order.
#[derive(Debug, Clone, Default)]
pub struct Namer {
    taken: BTreeSet<String>,
}

impl Namer {
    pub fn with_reserved(reserved: &[&str]) -> Self {
        Namer {
            taken: reserved.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// A unique name derived from `raw`. Every suffix in `companions` must
    /// also be free, so `x` and `x_q` are claimed together.
    pub fn claim(&mut self, raw: &str, companions: &[&str]) -> String {
        let base = sanitize(raw);
        let free = |n: &str, taken: &BTreeSet<String>| {
            !taken.contains(n) && companions.iter().all(|c| !taken.contains(&format!("{n}{c}")))
        };
        let mut candidate = base.clone();
        let mut k = 1;
        while !free(&candidate, &self.taken) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        self.taken.insert(candidate.clone());
        for c in companions {
            self.taken.insert(format!("{candidate}{c}"));
        }
        candidate
    }
}

/// Port names shared by every distributed slave module.
pub const SLAVE_PORTS: [&str; 8] = ["clk", "rst", "cfg_addr", "cfg_wdata", "cfg_write", "cfg_sel", "ready", "busy"];

/// Internal names of a distributed slave module.
pub const SLAVE_INTERNALS: [&str; 2] = ["ready_r", "busy_sync"];

/// Internal names of a global-topology slave module.
pub const GLOBAL_SLAVE_INTERNALS: [&str; 3] = ["settings_in", "sync_stage", "stage_out"];

/// Every identifier derived from a spec, computed once so the design files
/// and the testbench agree.
#[derive(Debug, Clone)]
pub struct Names {
    pub top: String,
    pub slaves: Vec<SlaveNames>,
    /// Top-level clock port per clock domain (index 0 is `clk`).
    pub domain_clocks: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SlaveNames {
    pub module: String,
    pub instance: String,
    /// Top-level busy input (distributed only).
    pub busy_port: String,
    /// Per setting: name inside the slave module (storage is `<name>_q`).
    pub settings: Vec<String>,
    /// Per setting: output port name on the top module.
    pub top_ports: Vec<String>,
}

impl Names {
    pub fn new(spec: &RegisterMapSpec) -> Self {
        let prefix = sanitize(&spec.name);
        let mut modules = Namer::with_reserved(&[]);
        let top = modules.claim(&format!("{prefix}_top"), &[]);

        let mut top_scope = Namer::with_reserved(&[
            "clk", "rst", "cfg_addr", "cfg_wdata", "cfg_write", "cfg_ready", "cfg_sel", "ready", "mem_q", "mem_flat",
            "mem_out_q", "settings_src",
        ]);
        let domain_clocks = spec
            .clock_domains
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if i == 0 {
                    "clk".to_string()
                } else {
                    top_scope.claim(&format!("clk_{}", d.name), &[])
                }
            })
            .collect();

        let slaves = spec
            .slaves
            .iter()
            .map(|s| {
                let module = modules.claim(&format!("{prefix}_{}", s.name), &[]);
                let instance = top_scope.claim(&format!("u_{}", s.name), &[]);
                let busy_port = top_scope.claim(&format!("{}_busy", s.name), &[]);
                let mut reserved: Vec<&str> = SLAVE_PORTS.to_vec();
                reserved.extend(SLAVE_INTERNALS);
                reserved.extend(GLOBAL_SLAVE_INTERNALS);
                let mut local = Namer::with_reserved(&reserved);
                let settings = s.registers.iter().map(|r| local.claim(&r.name, &["_q"])).collect();
                let top_ports = s
                    .registers
                    .iter()
                    .map(|r| top_scope.claim(&format!("{}_{}", s.name, r.name), &[]))
                    .collect();
                SlaveNames {
                    module,
                    instance,
                    busy_port,
                    settings,
                    top_ports,
                }
            })
            .collect();
        Names {
            top,
            slaves,
            domain_clocks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_rules() {
        assert_eq!(sanitize("Gain-Ctrl.0"), "gain_ctrl_0");
        assert_eq!(sanitize("3db"), "n3db");
        assert_eq!(sanitize("module"), "module_");
        assert_eq!(sanitize(""), "x");
        assert_eq!(sanitize("Ünïcode"), "_n_code");
    }

    #[test]
    fn collisions_are_suffixed_in_order() {
        let mut n = Namer::with_reserved(&["ready"]);
        assert_eq!(n.claim("Ready", &["_q"]), "ready_1");
        assert_eq!(n.claim("a-b", &["_q"]), "a_b");
        assert_eq!(n.claim("A_B", &["_q"]), "a_b_1");
        // `a_b_q` would clash with the storage of `a_b`
        assert_eq!(n.claim("a_b_q", &["_q"]), "a_b_q_1");
    }
}
