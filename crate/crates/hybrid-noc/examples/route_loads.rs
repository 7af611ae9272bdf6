//! Shortest-path routes and per-link loads on a 4×4 mesh with express links, written
//! as a utilization CSV on stdout.

use hybrid_noc::routing::{accumulate_loads, compute_routes, write_utilization_csv, RouteMetric};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, build_mesh};
use hybrid_noc::traffic::{generate_synthetic, TrafficModelConfig};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let mesh = build_mesh(4, profiles.get(TechKind::Electronic)?)?;
    let topo = add_express_links(&mesh, 3, profiles.get(TechKind::HyPPI)?)?;
    let routes = compute_routes(&topo, RouteMetric::Latency)?;
    for (s, d) in [(0, 3), (0, 15), (5, 10)] {
        let path: Vec<String> = routes.route(&topo, s, d).iter().map(|&l| format!("{}->{}", topo.links[l].src, topo.links[l].dst)).collect();
        println!("{s:>2} -> {d:>2}: {} clk via {}", routes.route_latency(s, d), path.join(" "));
    }
    let spec = generate_synthetic(&topo, &TrafficModelConfig::default())?;
    let load = accumulate_loads(&topo, &routes, &spec);
    println!("mean utilization {:.5}\n", load.mean_utilization());
    write_utilization_csv(std::io::stdout().lock(), &topo, &load)
}
