//! Dynamic energy of an all-to-all trace on the base mesh and on every express variant,
//! laid out base first, then by express technology and hop span. A short version of the
//! trace is also simulated to confirm the analytical traversal counts.

use hybrid_noc::calib::CostCalibration;
use hybrid_noc::routing::{compute_routes, RouteMetric};
use hybrid_noc::simcore::{analytical_trace_energy, dynamic_energy_report, simulate, EnergyEntry, SimConfig};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, build_mesh};
use hybrid_noc::traffic::{split_messages, synthesize_benchmark_like, Pattern, FLIT_BYTES};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let calib = CostCalibration::builtin();
    let mesh = build_mesh(16, profiles.get(TechKind::Electronic)?)?;
    let full = split_messages(&synthesize_benchmark_like(Pattern::AllToAll, &mesh, 6400), FLIT_BYTES)?;
    let short = split_messages(&synthesize_benchmark_like(Pattern::AllToAll, &mesh, 8), FLIT_BYTES)?;
    let mut entries = Vec::new();
    let mut variants = vec![None];
    for tech in [TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI] {
        for hops in [3, 5, 15] {
            variants.push(Some((tech, hops)));
        }
    }
    for v in variants {
        let topo = match v {
            None => mesh.clone(),
            Some((t, h)) => add_express_links(&mesh, h, profiles.get(t)?)?,
        };
        let routes = compute_routes(&topo, RouteMetric::Latency)?;
        let energy_j = analytical_trace_energy(&topo, &routes, &full, &calib)?;
        let sim = simulate(&topo, &routes, &short, &calib, &SimConfig::default())?;
        let check = analytical_trace_energy(&topo, &routes, &short, &calib)?;
        assert!((sim.dynamic_energy_j - check).abs() <= 1e-9 * check);
        entries.push(EnergyEntry { express: v, energy_j });
    }
    println!("{:<20} {:>5} {:>12} {:>10}", "network", "hops", "energy J", "vs base");
    for r in dynamic_energy_report(&entries)? {
        println!("{:<20} {:>5} {:>12.5} {:>10.3}", r.network, r.hops, r.energy_j, r.relative_to_base);
    }
    Ok(())
}
