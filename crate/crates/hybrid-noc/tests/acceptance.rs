//! Acceptance criteria 1 to 10. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use hybrid_noc::analysis::{explore, find_row, ExploreConfig, ExploreRow, Variant};
use hybrid_noc::calib::CostCalibration;
use hybrid_noc::cli;
use hybrid_noc::optproj::{electronic_projection, optical_projection, LossPolicy};
use hybrid_noc::routing::{accumulate_loads, compute_routes, RouteMetric};
use hybrid_noc::simcore::{analytical_trace_energy, compare_latency, simulate, SimConfig};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, aggregate_capability, build_mesh, LinkRole, Topology};
use hybrid_noc::traffic::{split_messages, synthesize_benchmark_like, synthesize_with, Pattern, PatternConfig, TrafficSpec, FLIT_BYTES};

use TechKind::{Electronic as E, HyPPI as H, Photonic as P};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn profiles() -> ProfileSet {
    ProfileSet::builtin()
}

fn mesh16() -> Topology {
    build_mesh(16, profiles().get(E).unwrap()).unwrap()
}

fn express(base: &Topology, tech: TechKind, hops: usize) -> Topology {
    add_express_links(base, hops, profiles().get(tech).unwrap()).unwrap()
}

fn clear_of(rows: &[ExploreRow], v: Variant) -> f64 {
    find_row(rows, v).map(|r| r.clear()).unwrap_or(f64::NAN)
}

fn criterion_1() -> Outcome {
    let mesh = mesh16();
    let got: Vec<f64> = [None, Some(3), Some(5), Some(15)]
        .iter()
        .map(|h| aggregate_capability(&h.map_or(mesh.clone(), |h| express(&mesh, H, h))))
        .collect();
    check(got == [187.5, 218.75, 206.25, 193.75], format!("capability mesh/3/5/15 = {got:?} Gb/s"))
}

fn criterion_2() -> Outcome {
    let mesh = mesh16();
    let per_dir = |hops| {
        let t = express(&mesh, H, hops);
        t.links
            .iter()
            .filter(|l| l.role == LinkRole::Express && l.src < 16 && l.dst < 16 && l.src < l.dst)
            .count()
    };
    let (a, b) = (per_dir(3), per_dir(5));
    check(a == 5 && b == 3, format!("express links per direction per row: hops 3 -> {a}, hops 5 -> {b}"))
}

fn explore_all() -> Vec<ExploreRow> {
    explore(&profiles(), &CostCalibration::builtin(), &ExploreConfig::default()).unwrap()
}

fn criterion_3(rows: &[ExploreRow]) -> Outcome {
    let r = |v| find_row(rows, v).and_then(|x| x.report).map_or(f64::NAN, |x| x.r);
    let got = [r(Variant::express(E, H, 3)), r(Variant::express(E, H, 5)), r(Variant::express(E, H, 15)), r(Variant::plain(E))];
    let want = [0.808, 0.885, 1.050, 1.122];
    let ordered = got[0] < got[1] && got[1] < got[2] && got[2] < got[3];
    let within = got.iter().zip(want).all(|(g, w)| (g / w - 1.0).abs() <= 0.25);
    let dev: Vec<String> = got.iter().zip(want).map(|(g, w)| format!("{:+.1}%", (g / w - 1.0) * 100.0)).collect();
    check(
        ordered && within,
        format!("R hops3/5/15/mesh = {:.3}/{:.3}/{:.3}/{:.3} ({})", got[0], got[1], got[2], got[3], dev.join(" ")),
    )
}

fn criterion_4(rows: &[ExploreRow]) -> Outcome {
    let ratio = clear_of(rows, Variant::express(E, H, 3)) / clear_of(rows, Variant::plain(E));
    check((1.5..=2.1).contains(&ratio), format!("CLEAR(electronic+hyppi3) / CLEAR(electronic) = {ratio:.3}"))
}

fn criterion_5(rows: &[ExploreRow]) -> Outcome {
    let c = |b, e, h| clear_of(rows, Variant::express(b, e, h));
    let hops = [3, 5, 15];
    let a = hops.iter().all(|&h| c(E, P, h) < c(E, E, h) && c(E, P, h) < c(E, H, h));
    let b = hops.iter().all(|&h| c(P, P, h) > c(P, E, h));
    let mut dec = true;
    for base in [E, P, H] {
        for ex in [E, P, H] {
            dec &= c(base, ex, 3) > c(base, ex, 5) && c(base, ex, 5) > c(base, ex, 15);
        }
    }
    let best = |base: TechKind| rows.iter().filter(|r| r.variant.base == base).map(|r| r.clear()).fold(0.0, f64::max);
    let d = best(H) > best(E) && best(H) > best(P);
    check(a && b && dec && d, format!("(a) {a} (b) {b} (c) {dec} (d) {d}"))
}

fn criterion_6() -> Outcome {
    let cal = CostCalibration::builtin();
    let mesh = mesh16();
    let mut static_w = 0.0;
    for &p in &mesh.router_ports {
        static_w += cal.router(p).unwrap().static_w;
    }
    for l in &mesh.links {
        static_w += cal.link_static_w(l).unwrap();
    }
    let full = split_messages(&synthesize_benchmark_like(Pattern::AllToAll, &mesh, 6400), FLIT_BYTES).unwrap();
    let short = split_messages(&synthesize_benchmark_like(Pattern::AllToAll, &mesh, 8), FLIT_BYTES).unwrap();
    let energy = |t: &Topology| {
        let routes = compute_routes(t, RouteMetric::Latency).unwrap();
        let sim = simulate(t, &routes, &short, &cal, &SimConfig::default()).unwrap();
        let check = analytical_trace_energy(t, &routes, &short, &cal).unwrap();
        assert!((sim.dynamic_energy_j - check).abs() <= 1e-9 * check, "simulated energy differs from traversal count");
        analytical_trace_energy(t, &routes, &full, &cal).unwrap()
    };
    let base = energy(&mesh);
    let mut e = [[0.0; 3]; 3];
    for (i, tech) in [E, P, H].into_iter().enumerate() {
        for (j, h) in [3, 5, 15].into_iter().enumerate() {
            e[i][j] = energy(&express(&mesh, tech, h));
        }
    }
    let static_ok = (static_w / 1.53 - 1.0).abs() <= 0.01;
    let order = (0..3).all(|j| e[1][j] > 10.0 * e[0][j] && e[0][j] > e[2][j]);
    let hmax = e[2].iter().cloned().fold(f64::MIN, f64::max);
    let hmin = e[2].iter().cloned().fold(f64::MAX, f64::min);
    let spread = hmax / hmin - 1.0;
    check(
        static_ok && order && spread <= 0.02,
        format!(
            "static {static_w:.4} W; base {base:.5} J; elec {:.5}/{:.5}/{:.5}; phot {:.4}/{:.4}/{:.4}; hyppi {:.5}/{:.5}/{:.5} (spread {:.2}%)",
            e[0][0],
            e[0][1],
            e[0][2],
            e[1][0],
            e[1][1],
            e[1][2],
            e[2][0],
            e[2][1],
            e[2][2],
            spread * 100.0
        ),
    )
}

fn criterion_7() -> Outcome {
    let mesh = mesh16();
    let cal = CostCalibration::builtin();
    let topos: Vec<(String, Topology)> = [None, Some(3), Some(5), Some(15)]
        .iter()
        .map(|h| match h {
            None => ("mesh".to_string(), mesh.clone()),
            Some(h) => (format!("hyppi{h}"), express(&mesh, H, *h)),
        })
        .collect();
    let speedups = |pattern, rounds| {
        let cfg = PatternConfig {
            rounds,
            ..PatternConfig::default()
        };
        let packets = split_messages(&synthesize_with(pattern, &mesh, &cfg), FLIT_BYTES).unwrap();
        assert!(packets.len() >= 10_000);
        let rows = compare_latency(&topos, &packets, &cal, &SimConfig::default()).unwrap();
        rows.iter().map(|(r, _)| r.speedup.unwrap()).collect::<Vec<f64>>()
    };
    let nb = speedups(Pattern::Neighbor1Hop, 11);
    let lr = speedups(Pattern::LongRange, 10);
    let sr = speedups(Pattern::ShortRange, 25);
    let nb_ok = nb.iter().all(|s| (1.0 / s - 1.0).abs() < 0.05);
    let lr_ok = lr[3] >= 1.3;
    let sr_ok = sr[1] > sr[2] && sr[1] > sr[3];
    let fmt = |v: &[f64]| v[1..].iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join("/");
    check(
        nb_ok && lr_ok && sr_ok,
        format!("speedup hops 3/5/15: neighbor {} long-range {} short-range {}", fmt(&nb), fmt(&lr), fmt(&sr)),
    )
}

fn floyd_latency(t: &Topology) -> Vec<u64> {
    let n = t.num_nodes();
    let mut d = vec![u64::MAX / 4; n * n];
    for i in 0..n {
        d[i * n + i] = 0;
    }
    for l in &t.links {
        let w = l.latency as u64 + 3;
        d[l.src * n + l.dst] = d[l.src * n + l.dst].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d
}

fn criterion_8() -> Outcome {
    let cal = CostCalibration::builtin();
    let set = profiles();
    let mut mismatched = 0;
    let mut meshes = 0;
    for tech in [E, H] {
        let m4 = build_mesh(4, set.get(tech).unwrap()).unwrap();
        for t in [m4.clone(), add_express_links(&m4, 2, set.get(H).unwrap()).unwrap(), add_express_links(&m4, 3, set.get(E).unwrap()).unwrap()] {
            let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
            let cfg = PatternConfig {
                volume_bytes: 300,
                rounds: 2,
                load: 0.2,
            };
            let packets = split_messages(&synthesize_with(Pattern::AllToAll, &t, &cfg), FLIT_BYTES).unwrap();
            let sim = simulate(&t, &routes, &packets, &cal, &SimConfig::default()).unwrap();
            let load = accumulate_loads(&t, &routes, &TrafficSpec::from_packets(16, &packets));
            if sim.link_flits.iter().zip(&load.flit_rate).any(|(&a, &b)| a as f64 != b) {
                mismatched += 1;
            }
        }
    }
    let mut pairs = 0;
    let mut wrong = 0;
    for k in 2..=6 {
        for tech in [E, H] {
            let m = build_mesh(k, set.get(tech).unwrap()).unwrap();
            let mut variants = vec![m.clone()];
            for h in 2..k {
                variants.push(add_express_links(&m, h, set.get(if tech == E { H } else { E }).unwrap()).unwrap());
            }
            for t in variants {
                meshes += 1;
                let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
                let oracle = floyd_latency(&t);
                let n = t.num_nodes();
                for s in 0..n {
                    for d in 0..n {
                        if s != d {
                            pairs += 1;
                            if routes.route_latency(s, d) as u64 != oracle[s * n + d] + 3 {
                                wrong += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    check(
        mismatched == 0 && wrong == 0,
        format!("flit-count mismatches on 6 4x4 networks: {mismatched}; oracle mismatches: {wrong} of {pairs} pairs on {meshes} networks"),
    )
}

fn criterion_9() -> Outcome {
    let set = profiles();
    let cal = CostCalibration::builtin();
    let traffic = Default::default();
    let (p, _) = optical_projection(P, 16, &set, &cal, &traffic, LossPolicy::Min).unwrap();
    let (h, _) = optical_projection(H, 16, &set, &cal, &traffic, LossPolicy::Min).unwrap();
    let e = electronic_projection(16, &set, &cal).unwrap();
    let within = |v: f64, w: f64, tol: f64| (v / w - 1.0).abs() <= tol;
    let ok = within(p.total_area_mm2, 127.7, 0.10)
        && within(h.total_area_mm2, 1.24, 0.10)
        && within(p.energy_fj_per_bit, 352.0, 0.15)
        && within(h.energy_fj_per_bit, 354.0, 0.15)
        && p.total_area_mm2 / h.total_area_mm2 >= 50.0;
    check(
        ok,
        format!(
            "area photonic {:.2} / hyppi {:.3} mm2 (ratio {:.1}); energy {:.1} / {:.1} fJ/bit; electronic {:.1} mm2",
            p.total_area_mm2,
            h.total_area_mm2,
            p.total_area_mm2 / h.total_area_mm2,
            p.energy_fj_per_bit,
            h.energy_fj_per_bit,
            e.total_area_mm2
        ),
    )
}

fn run_twice(args: &[&str], dir: &Path) -> Result<(), String> {
    for pass in ["a", "b"] {
        let out = dir.join(pass);
        let mut argv = vec!["hybrid-noc", "--out", out.to_str().unwrap()];
        argv.extend_from_slice(args);
        let code = cli::run(argv);
        if code != 0 {
            return Err(format!("`{}` exited {code}", args.join(" ")));
        }
    }
    for entry in std::fs::read_dir(dir.join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        if !name.to_string_lossy().ends_with(".csv") {
            continue;
        }
        let a = std::fs::read(dir.join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.join("b").join(&name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["link-clear", "--lengths", "0.001:10:log"],
        &["explore", "--k", "16", "--hops", "3,5,15"],
        &["simulate", "--pattern", "all-to-all", "--topo", "mesh16,mesh16+hyppi3", "--packet-dump"],
        &["project"],
    ];
    let mut failures = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let dir = tmp.path().join(i.to_string());
        if let Err(e) = run_twice(args, &dir) {
            failures.push(e);
        }
    }
    check(failures.is_empty(), if failures.is_empty() { "4 subcommands byte-identical".into() } else { failures.join("; ") })
}

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    let mut report = |n: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "criterion {n:>2}: {tag} [{secs:.1}s] {detail}");
        if outcome.is_err() {
            failed.push(n);
        }
    };
    report(1, &criterion_1);
    report(2, &criterion_2);
    let rows = explore_all();
    report(3, &|| criterion_3(&rows));
    report(4, &|| criterion_4(&rows));
    report(5, &|| criterion_5(&rows));
    report(6, &criterion_6);
    report(7, &criterion_7);
    report(8, &criterion_8);
    report(9, &criterion_9);
    report(10, &criterion_10);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
