//! Replays benchmark-like pattern traces on a plain electronic mesh and on meshes with
//! HyPPI express links, printing average latency and speedup per topology.

use hybrid_noc::calib::CostCalibration;
use hybrid_noc::simcore::{compare_latency, SimConfig};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, build_mesh, Topology};
use hybrid_noc::traffic::{split_messages, synthesize_with, Pattern, PatternConfig, FLIT_BYTES};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let calib = CostCalibration::builtin();
    let mesh = build_mesh(16, profiles.get(TechKind::Electronic)?)?;
    let mut topologies: Vec<(String, Topology)> = vec![("mesh16".into(), mesh.clone())];
    for hops in [3, 5, 15] {
        let t = add_express_links(&mesh, hops, profiles.get(TechKind::HyPPI)?)?;
        topologies.push((format!("mesh16+hyppi{hops}"), t));
    }
    for (pattern, rounds) in [(Pattern::Neighbor1Hop, 11), (Pattern::ShortRange, 25), (Pattern::LongRange, 10)] {
        let cfg = PatternConfig {
            rounds,
            ..PatternConfig::default()
        };
        let packets = split_messages(&synthesize_with(pattern, &mesh, &cfg), FLIT_BYTES)?;
        println!("{} ({} packets)", pattern.name(), packets.len());
        for (row, _) in compare_latency(&topologies, &packets, &calib, &SimConfig::default())? {
            println!(
                "  {:<16} avg {:>7.3}  speedup {:.3}  cycles {}",
                row.topology,
                row.avg_latency.unwrap_or(0.0),
                row.speedup.unwrap_or(0.0),
                row.sim_cycles
            );
        }
    }
    Ok(())
}
