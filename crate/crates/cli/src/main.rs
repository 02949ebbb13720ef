//! `regmap`: compile, simulate and cost settings-register maps.
//!
//! Exit codes: 0 success, 1 invalid input (usage, spec, script, design
//! point, missing calibration), 2 I/O failure, 3 a write timed out during
//! simulation, 4 the simulation verdict failed.

use clap::{Parser, Subcommand};
use regmap_core::cost::{self, Calibration, CorpusPoint, SweepRanges};
use regmap_core::elaborate::{elaborate, structural_counts, DesignModel};
use regmap_core::emit::{emit, emit_testbench};
use regmap_core::sim::{parse_script, violation_count, SimConfig, Simulator};
use regmap_core::spec::{parse_spec, validate, RegisterMapSpec, Topology};
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "regmap", version, about = "Settings-register map compiler and verification workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Elaborate a spec and write HDL, the model dump and structural counts.
    Compile {
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's topology.
        #[arg(long)]
        arch: Option<Topology>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a self-checking testbench driving this script.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Run a programming script against the distributed configuration bus.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        script: PathBuf,
        /// Stop at this time instead of running until the script is done.
        #[arg(long)]
        until_ps: Option<u64>,
        /// Write the trace CSV here (`-` for standard output).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Disable Ready gating; the run passes only if violations are found.
        #[arg(long)]
        fault_mode: bool,
        /// Configuration cycles a write may wait before it is abandoned.
        #[arg(long, default_value_t = 100_000)]
        timeout_cycles: u64,
    },
    /// Estimate the resources of one design point.
    Estimate {
        #[arg(long)]
        point: String,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Estimate every point of a parameter grid, e.g. `--point N_t=26..226:40`.
    Sweep {
        #[arg(long)]
        point: String,
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ratios of two design points (first over second).
    Compare {
        #[arg(long, num_args = 1, required = true)]
        point: Vec<String>,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Fit a calibration file from measured design points.
    Calibrate {
        /// JSON list of measured points; the bundled corpus by default.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(String),
    Io(String),
    Timeout(String),
    Verdict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Io(_) => 2,
            Failure::Timeout(_) => 3,
            Failure::Verdict(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Io(m) | Failure::Timeout(m) | Failure::Verdict(m) => f.write_str(m),
        }
    }
}

fn input(e: impl fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

/// Bulk output to stdout; a reader that hangs up early (`| head`) is not an error.
fn emit_stdout(text: &str) -> Result<(), Failure> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}

/// `println!` through [`emit_stdout`].
macro_rules! say {
    ($($arg:tt)*) => {
        emit_stdout(&format!("{}\n", format_args!($($arg)*)))?
    };
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Compile { spec, arch, out, script } => compile(&spec, arch, &out, script.as_deref()),
        Command::Simulate {
            spec,
            script,
            until_ps,
            trace,
            fault_mode,
            timeout_cycles,
        } => simulate(&spec, &script, until_ps, trace.as_deref(), fault_mode, timeout_cycles),
        Command::Estimate { point, calibration } => estimate(&point, calibration.as_deref()),
        Command::Sweep { point, calibration, csv } => sweep(&point, calibration.as_deref(), csv.as_deref()),
        Command::Compare { point, calibration } => compare(&point, calibration.as_deref()),
        Command::Calibrate { corpus, out } => calibrate(corpus.as_deref(), &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

/// Parse, apply the topology override and validate.
fn load(path: &Path, arch: Option<Topology>) -> Result<RegisterMapSpec, Failure> {
    let mut spec = parse_spec(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if let Some(t) = arch {
        let words = spec.target_count().max(1) as u32;
        let a = &mut spec.architecture;
        a.topology = t;
        if t.is_global() && (a.global_depth.is_none() || a.global_width.is_none()) {
            // one bus word per setting always fits
            a.global_width = Some(spec.bus.data_width);
            a.global_depth = Some(words);
        }
        if t == Topology::GlobalCdcDest {
            a.sync_length = a.sync_length.max(2);
        }
    }
    let report = validate(&spec);
    if !report.is_empty() {
        return Err(Failure::Input(format!("{} failed validation:\n{report}", path.display())));
    }
    Ok(spec)
}

fn counts_json(model: &DesignModel, spec: &RegisterMapSpec) -> String {
    let slaves: Vec<_> = spec
        .slaves
        .iter()
        .enumerate()
        .map(|(i, s)| serde_json::json!({"name": s.name, "counts": model.slave_counts(i)}))
        .collect();
    let doc = serde_json::json!({
        "topology": model.topology,
        "total": structural_counts(model),
        "slaves": slaves,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("counts serialize");
    s.push('\n');
    s
}

fn compile(spec_path: &Path, arch: Option<Topology>, out: &Path, script: Option<&Path>) -> Result<(), Failure> {
    let spec = load(spec_path, arch)?;
    let model = elaborate(&spec).map_err(input)?;
    let mut files = emit(&model, &spec).map_err(input)?;
    if let Some(path) = script {
        let script = parse_script(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let tb = emit_testbench(&model, &spec, &script).map_err(input)?;
        let name = format!("{}_tb.sv", regmap_core::emit::sanitize(&spec.name));
        files.insert(name, tb);
    }
    files.insert("model.txt".into(), model.canonical_dump());
    files.insert("counts.json".into(), counts_json(&model, &spec));

    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;
    for (name, text) in &files {
        write(&out.join(name), text)?;
    }
    let c = structural_counts(&model);
    say!("{} ({}), model sha256 {}", spec.name, model.topology.as_str(), model.content_hash());
    say!(
        "flipflops {}  decode_terms {}  mux_bits {}  max_unregistered_bundle_bits {}",
        c.flipflops, c.decode_terms, c.mux_bits, c.max_unregistered_bundle_bits
    );
    for name in files.keys() {
        say!("wrote {}", out.join(name).display());
    }
    Ok(())
}

fn simulate(
    spec_path: &Path,
    script_path: &Path,
    until_ps: Option<u64>,
    trace_path: Option<&Path>,
    fault_mode: bool,
    timeout_cycles: u64,
) -> Result<(), Failure> {
    let spec = load(spec_path, None)?;
    let script =
        parse_script(&read(script_path)?).map_err(|e| Failure::Input(format!("{}: {e}", script_path.display())))?;
    let config = SimConfig {
        fault_mode,
        timeout_cycles: Some(timeout_cycles),
    };
    let mut sim = Simulator::new(&spec, config).map_err(input)?;
    match until_ps {
        Some(t) => sim.run(&script, t).map_err(input)?,
        None => {
            sim.load(&script).map_err(input)?;
            sim.run_until_idle(u64::MAX);
        }
    }
    let trace = sim.trace();
    if let Some(path) = trace_path {
        let csv = trace.to_csv();
        if path == Path::new("-") {
            emit_stdout(&csv)?;
        } else {
            write(path, &csv)?;
        }
    }
    let violations = violation_count(trace);
    let summary = format!(
        "violations: {violations}\nend time: {} ps\ntrace sha256: {}\n",
        sim.time_ps(),
        trace.hash()
    );
    // keep a CSV on stdout clean
    if trace_path == Some(Path::new("-")) {
        eprint!("{summary}");
    } else {
        emit_stdout(&summary)?;
    }
    if sim.timed_out() {
        return Err(Failure::Timeout(format!(
            "a write waited more than {timeout_cycles} configuration cycles for Ready"
        )));
    }
    match (fault_mode, violations) {
        (false, 0) => Ok(()),
        (false, n) => Err(Failure::Verdict(format!("{n} violation(s)"))),
        (true, 0) => Err(Failure::Verdict("fault mode produced no violations".into())),
        (true, _) => Ok(()),
    }
}

fn calibration(path: Option<&Path>) -> Result<Calibration, Failure> {
    match path {
        None => Ok(Calibration::shipped()),
        Some(p) => Calibration::from_json(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn estimate(point: &str, cal_path: Option<&Path>) -> Result<(), Failure> {
    let cal = calibration(cal_path)?;
    let p = cost::parse_point(point).map_err(input)?;
    let e = cost::estimate(&p, &cal).map_err(input)?;
    say!("point      {}", p.label());
    say!(
        "           D={} W={} N_t={} w={} L={} S={}",
        p.depth, p.width, p.targets, p.target_width, p.sync_length, p.slaves
    );
    say!("registers  {}", e.registers);
    say!("alms       {:.1}", e.alms);
    say!("aluts      {:.1}", e.aluts);
    say!("fmax_mhz   {:.2}", e.fmax_mhz);
    Ok(())
}

fn sweep(ranges: &str, cal_path: Option<&Path>, csv: Option<&Path>) -> Result<(), Failure> {
    let cal = calibration(cal_path)?;
    let ranges = SweepRanges::parse(ranges).map_err(input)?;
    let rows = cost::sweep(&ranges, &cal).map_err(input)?;
    let text = cost::rows_to_csv(&rows);
    match csv {
        Some(path) => {
            write(path, &text)?;
            say!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => emit_stdout(&text)?,
    }
    Ok(())
}

fn compare(points: &[String], cal_path: Option<&Path>) -> Result<(), Failure> {
    let [a, b] = points else {
        return Err(Failure::Input(format!("compare needs exactly two --point values, got {}", points.len())));
    };
    let cal = calibration(cal_path)?;
    let a = cost::parse_point(a).map_err(input)?;
    let b = cost::parse_point(b).map_err(input)?;
    emit_stdout(&cost::compare(&a, &b, &cal).map_err(input)?.to_string())?;
    Ok(())
}

fn calibrate(corpus: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let corpus: Vec<CorpusPoint> = match corpus {
        None => cost::default_corpus(),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
    };
    let cal = cost::calibrate(&corpus).map_err(input)?;
    write(out, &cal.to_json())?;
    say!("c_global {}  c_distributed_per_slave {}", cal.c_global, cal.c_distributed_per_slave);
    for r in &cal.residuals {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:+.1}"));
        say!(
            "{:<28} registers {:>4}  alms {:>8}  aluts {:>7}  fmax {:>6}",
            r.label,
            r.registers.map_or("-".to_string(), |x| format!("{x:+}")),
            f(r.alms),
            f(r.aluts),
            f(r.fmax_mhz)
        );
    }
    say!("wrote {}", out.display());
    Ok(())
}
