//! Synthetic traffic on a 16×16 mesh: injection spread, hop distribution and the
//! utilization slope R with and without express links.

use hybrid_noc::analysis::{default_r_grid, utilization_slope};
use hybrid_noc::routing::{compute_routes, RouteMetric};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, build_mesh};
use hybrid_noc::traffic::{expected_hops, generate_synthetic, TrafficModelConfig};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let mesh = build_mesh(16, profiles.get(TechKind::Electronic)?)?;
    let cfg = TrafficModelConfig::default();
    let spec = generate_synthetic(&mesh, &cfg)?;
    let totals: Vec<f64> = (0..mesh.num_nodes()).map(|s| spec.source_total(s)).collect();
    let active = totals.iter().filter(|&&v| v > 0.05 * cfg.max_injection_rate).count();
    println!("total offered load {:.3} flits/cycle, {active} nodes above 5% of peak", spec.total());
    println!("mean hop distance at p = {}: {:.2}", cfg.p, expected_hops(&mesh, cfg.p));
    for hops in [None, Some(15), Some(5), Some(3)] {
        let t = match hops {
            None => mesh.clone(),
            Some(h) => add_express_links(&mesh, h, profiles.get(TechKind::HyPPI)?)?,
        };
        let routes = compute_routes(&t, RouteMetric::Hops)?;
        let (curve, r) = utilization_slope(&t, &routes, &cfg, &default_r_grid())?;
        let last = curve.samples.last().unwrap();
        let name = hops.map_or("mesh".to_string(), |h| format!("hops {h}"));
        println!("{name:<8} R = {r:.4}  (U = {:.5} at r = {})", last.1, last.0);
    }
    Ok(())
}
