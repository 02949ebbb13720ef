use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn regmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regmap")).args(args).output().expect("binary runs")
}

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn sample(name: &str) -> String {
    samples().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn compile_writes_top_slaves_dump_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = regmap(&["compile", "--spec", &sample("radio.json"), "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "counts.json",
            "model.txt",
            "radio_frontend_agc.sv",
            "radio_frontend_ddc.sv",
            "radio_frontend_fir.sv",
            "radio_frontend_top.sv"
        ]
    );
    let counts: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("counts.json")).unwrap()).unwrap();
    assert_eq!(counts["slaves"].as_array().unwrap().len(), 3);
    assert!(counts["total"]["flipflops"].as_u64().unwrap() > 0);
}

#[test]
fn compile_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = regmap(&["compile", "--spec", &sample("radio.json"), "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for e in std::fs::read_dir(a.path()).unwrap() {
        let name = e.unwrap().file_name();
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn compile_arch_override_and_testbench() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = regmap(&["compile", "--spec", &sample("radio.json"), "--arch", "global_registered", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("(global_registered)"));
    let top = std::fs::read_to_string(dir.path().join("radio_frontend_top.sv")).unwrap();
    assert!(top.contains("mem_out_q"));

    let tb_dir = tempfile::tempdir().unwrap();
    let o = regmap(&[
        "compile",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("program.json"),
        "--out",
        tb_dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let tb = std::fs::read_to_string(tb_dir.path().join("radio_frontend_tb.sv")).unwrap();
    assert!(tb.contains("module radio_frontend_tb;"));
}

#[test]
fn compile_rejects_overlapping_slaves_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(samples().join("radio.json")).unwrap().replace("\"0x800\"", "\"0x400\"");
    let spec = dir.path().join("overlap.json");
    std::fs::write(&spec, text).unwrap();
    let o = regmap(&["compile", "--spec", spec.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("RM004"));
}

#[test]
fn compile_missing_file_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = regmap(&["compile", "--spec", "/definitely/not/here.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_conformant_script() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = regmap(&[
        "simulate",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("program.json"),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("violations: 0"));
    let csv = std::fs::read_to_string(trace).unwrap();
    assert!(csv.starts_with("time_ps,kind,slave,addr,data\n"));
    assert_eq!(csv.lines().filter(|l| l.contains(",write_accepted,")).count(), 5);
}

#[test]
fn trace_on_stdout_is_pure_csv() {
    let o = regmap(&[
        "simulate",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("program.json"),
        "--trace",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("time_ps,kind,slave,addr,data\n"));
    assert!(out.lines().skip(1).all(|l| l.split(',').count() == 5), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("violations: 0"));
}

#[test]
fn fault_mode_inverts_the_verdict() {
    let gated = regmap(&["simulate", "--spec", &sample("radio.json"), "--script", &sample("busy_write.json")]);
    assert_eq!(gated.status.code(), Some(0));
    assert!(stdout(&gated).contains("violations: 0"));

    let faulty = regmap(&[
        "simulate",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("busy_write.json"),
        "--fault-mode",
    ]);
    assert_eq!(faulty.status.code(), Some(0));
    assert!(!stdout(&faulty).contains("violations: 0"));

    let clean_faulty = regmap(&[
        "simulate",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("swap.json"),
        "--fault-mode",
    ]);
    assert_eq!(clean_faulty.status.code(), Some(4));
}

#[test]
fn simulate_timeout_is_exit_3() {
    let o = regmap(&[
        "simulate",
        "--spec",
        &sample("radio.json"),
        "--script",
        &sample("busy_write.json"),
        "--timeout-cycles",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_script_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"writes": [{"at": 1}]}"#).unwrap();
    let o = regmap(&["simulate", "--spec", &sample("radio.json"), "--script", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("writes[0].at"));
}

#[test]
fn simulate_trace_is_deterministic() {
    let run = || stdout(&regmap(&["simulate", "--spec", &sample("radio.json"), "--script", &sample("swap.json"), "--trace", "-"]));
    let a = run();
    assert!(a.contains(",swap_performed,"));
    assert_eq!(a, run());
}

#[test]
fn estimate_register_delta_for_the_output_register() {
    let regs = |point: &str| -> i64 {
        let o = regmap(&["estimate", "--point", point]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let out = stdout(&o);
        let line = out.lines().find(|l| l.starts_with("registers")).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    let plain = regs("topology=global,D=128,W=512");
    let registered = regs("topology=global_registered,D=128,W=512");
    assert_eq!(registered - plain, 65_536);
}

#[test]
fn sweep_row_count_follows_the_range() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = regmap(&["sweep", "--point", "topology=global_cdc_dest,N_t=26..226:40", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.starts_with("topology,D,W,N_t,w,L,S,registers,alms,aluts,fmax_mhz\n"));
}

#[test]
fn compare_prints_the_ratio_table() {
    let o = regmap(&["compare", "--point", "topology=distributed", "--point", "topology=global_cdc_dest"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let ratio = |metric: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(metric)).unwrap();
        line.split_whitespace().last().unwrap().parse().unwrap()
    };
    assert!((ratio("registers") - 0.197).abs() < 0.01);
    assert!((ratio("alms") - 0.253).abs() < 0.03);
    let one = regmap(&["compare", "--point", "topology=distributed"]);
    assert_eq!(one.status.code(), Some(1));
}

#[test]
fn uncalibrated_family_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = regmap_core::cost::Calibration::shipped().to_json();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["alm"].as_object_mut().unwrap().remove("with_targets");
    let path = dir.path().join("cal.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = regmap(&["estimate", "--point", "topology=distributed", "--calibration", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no calibration"));
}

#[test]
fn calibrate_reproduces_the_bundled_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.json");
    let o = regmap(&["calibrate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        regmap_core::cost::Calibration::shipped().to_json()
    );
}
