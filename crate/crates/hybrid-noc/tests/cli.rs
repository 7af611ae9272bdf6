use std::fs;
use std::path::Path;

use hybrid_noc::cli::{run, EXIT_IO, EXIT_TIMEOUT, EXIT_USAGE, EXIT_VALIDATION};

fn run_in(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["hybrid-noc", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(argv)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn reports_carry_documented_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(run_in(out, &["link-clear", "--points", "4"]), 0);
    assert_eq!(run_in(out, &["explore", "--k", "4", "--hops", "2"]), 0);
    assert_eq!(run_in(out, &["simulate", "--topo", "mesh4,mesh4+hyppi2", "--pattern", "neighbor", "--packet-dump"]), 0);
    assert_eq!(run_in(out, &["project", "--k", "4"]), 0);
    let cases = [
        ("link_clear.csv", "technology,length_mm,capacity_gbps,latency_ps,energy_fj_per_bit,area_um2,clear"),
        (
            "explore_report.csv",
            "base_tech,express_tech,hops,status,capability_gbps,latency_clk,static_power_w,dynamic_power_w,power_w,area_mm2,r,clear",
        ),
        ("sim_report.csv", "topology,packets,flits,avg_latency,min_latency,max_latency,speedup,dynamic_energy_j,sim_cycles"),
        ("packets_0_mesh4.csv", "id,src,dst,flits,inject_cycle,delivered_cycle,latency"),
        ("projection.csv", "network,energy_fj_per_bit,area_mm2,latency_factor,norm_latency,norm_energy,norm_area,wins"),
    ];
    for (file, want) in cases {
        assert_eq!(header(&out.join(file)), want, "{file}");
    }
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn simulate_reports_expected_rows() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &["simulate", "--topo", "mesh4,mesh4+electronic2", "--pattern", "all-to-all"]), 0);
    let text = fs::read_to_string(tmp.path().join("sim_report.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("mesh4,240,240,"));
    assert!(rows[1].starts_with("mesh4+electronic2,240,240,"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["explore", "--k", "6", "--hops", "2,3", "--dump-utilization"];
    assert_eq!(run_in(&tmp.path().join("a"), &args), 0);
    assert_eq!(run_in(&tmp.path().join("b"), &args), 0);
    let mut files = 0;
    for entry in fs::read_dir(tmp.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            files += 1;
            assert_eq!(fs::read(tmp.path().join("a").join(&name)).unwrap(), fs::read(tmp.path().join("b").join(&name)).unwrap());
        }
    }
    assert!(files > 1);
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(run_in(&first, &["--seed", "9", "simulate", "--topo", "mesh4+hyppi3", "--pattern", "long-range", "--rounds", "3"]), 0);
    let again = tmp.path().join("again");
    let manifest = first.join("manifest.toml");
    assert_eq!(run_in(&again, &["replay", manifest.to_str().unwrap()]), 0);
    assert_eq!(fs::read(first.join("sim_report.csv")).unwrap(), fs::read(again.join("sim_report.csv")).unwrap());
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert_eq!(run_in(out, &["no-such-command"]), EXIT_USAGE);
    assert_eq!(run_in(out, &["explore", "--k"]), EXIT_USAGE);
    assert_eq!(run_in(out, &["explore", "--k", "1"]), EXIT_VALIDATION);
    assert_eq!(run_in(out, &["simulate", "--topo", "ring9"]), EXIT_VALIDATION);
    assert_eq!(run_in(out, &["simulate", "--trace", out.join("missing.trace").to_str().unwrap()]), EXIT_IO);
    assert_eq!(run_in(out, &["--calib", out.join("missing.toml").to_str().unwrap(), "project"]), EXIT_IO);
    assert_eq!(run_in(out, &["simulate", "--topo", "mesh4", "--pattern", "all-to-all", "--max-cycles", "5"]), EXIT_TIMEOUT);
    assert_eq!(run(["hybrid-noc", "--help"]), 0);
}

#[test]
fn trace_files_drive_the_simulator() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("t.trace");
    fs::write(&trace, "# cycle src dst bytes\n0 0 1 8\n10 3 12 300\n").unwrap();
    assert_eq!(run_in(tmp.path(), &["simulate", "--topo", "mesh4", "--trace", trace.to_str().unwrap()]), 0);
    let text = fs::read_to_string(tmp.path().join("sim_report.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("mesh4,"), "{row}");
    fs::write(&trace, "0 0 99 8\n").unwrap();
    assert_eq!(run_in(tmp.path(), &["simulate", "--topo", "mesh4", "--trace", trace.to_str().unwrap()]), EXIT_VALIDATION);
}
