//! Full design-space exploration on a 16×16 mesh: every base technology with every
//! express technology at hop spans 3, 5 and 15, ranked by system CLEAR.

use hybrid_noc::analysis::{explore, ExploreConfig, RowStatus};
use hybrid_noc::calib::CostCalibration;
use hybrid_noc::techlib::ProfileSet;

fn main() -> hybrid_noc::Result<()> {
    let rows = explore(&ProfileSet::builtin(), &CostCalibration::builtin(), &ExploreConfig::default())?;
    println!("{:<24} {:>8} {:>8} {:>8} {:>9} {:>7} {:>10}", "network", "C Gb/s", "L clk", "P W", "A mm2", "R", "CLEAR");
    for row in &rows {
        match (row.status, row.report) {
            (RowStatus::Ok, Some(r)) => println!(
                "{:<24} {:>8.2} {:>8.3} {:>8.4} {:>9.3} {:>7.4} {:>10.5}",
                row.variant.to_string(),
                r.capability_gbps,
                r.latency_clk,
                r.power_w,
                r.area_mm2,
                r.r,
                r.clear
            ),
            _ => println!("{:<24} infeasible", row.variant.to_string()),
        }
    }
    Ok(())
}
