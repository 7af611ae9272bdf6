//! Link-level CLEAR of every technology over 1 μm to 10 mm, with the winning
//! technology at each length and the points where the winner changes.

use hybrid_noc::techlib::{clear_sweep, log_lengths, winners, ProfileSet};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let lengths = log_lengths(0.001, 10.0, 41);
    let rows = clear_sweep(&profiles.profiles, &lengths)?;
    println!("{:>10}  {:>11} {:>11} {:>11} {:>11}  winner", "mm", "electronic", "photonic", "plasmonic", "hyppi");
    let mut last = None;
    for (len, win) in winners(&rows) {
        let at: Vec<String> = rows.iter().filter(|r| r.length_mm == len).map(|r| format!("{:>11.3e}", r.clear)).collect();
        println!("{len:>10.4}  {}  {win}", at.join(" "));
        if last.is_some_and(|w| w != win) {
            println!("            winner changes to {win} near {len:.4} mm");
        }
        last = Some(win);
    }
    Ok(())
}
