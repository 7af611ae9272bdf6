//! Projects all-photonic and all-HyPPI 16×16 meshes against the electronic mesh and
//! prints the normalized comparison axes.

use hybrid_noc::calib::CostCalibration;
use hybrid_noc::optproj::{electronic_projection, optical_projection, radar_compare, LossPolicy};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::traffic::TrafficModelConfig;

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let calib = CostCalibration::builtin();
    let traffic = TrafficModelConfig::default();
    let mut all = vec![electronic_projection(16, &profiles, &calib)?];
    for kind in [TechKind::Photonic, TechKind::HyPPI] {
        let (p, e) = optical_projection(kind, 16, &profiles, &calib, &traffic, LossPolicy::Min)?;
        println!("{kind}: {} infeasible pairs", e.infeasible_pairs);
        all.push(p);
    }
    println!("{:<11} {:>14} {:>10} {:>6} {:>8} {:>8} {:>8}  wins", "network", "fJ/bit", "mm2", "lat", "n_lat", "n_E", "n_A");
    for r in radar_compare(&all) {
        println!(
            "{:<11} {:>14.1} {:>10.3} {:>6.2} {:>8.4} {:>8.2e} {:>8.4}  {}",
            r.network, r.energy_fj_per_bit, r.area_mm2, r.latency_factor, r.norm_latency, r.norm_energy, r.norm_area, r.wins
        );
    }
    Ok(())
}
