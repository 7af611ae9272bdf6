//! Parses a small message trace, splits it into 1-flit and 32-flit packets and writes
//! a pattern trace in the same format.

use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::build_mesh;
use hybrid_noc::traffic::{parse_trace, split_messages, synthesize_benchmark_like, write_trace, Pattern, FLIT_BYTES};

const TRACE: &str = "\
# inject_cycle src dst payload_bytes
0 0 5 8
0 3 12 2048
4 7 1 260
9 15 0 9
";

fn main() -> hybrid_noc::Result<()> {
    let messages = parse_trace(TRACE, "inline", 16)?;
    for m in &messages {
        let packets = split_messages(std::slice::from_ref(m), FLIT_BYTES)?;
        let sizes: Vec<u32> = packets.iter().map(|p| p.flits).collect();
        println!("{:>4} B {:>2} -> {:>2} at {:>2}: packets {sizes:?}", m.payload_bytes, m.src, m.dst, m.inject_cycle);
    }
    let mesh = build_mesh(4, ProfileSet::builtin().get(TechKind::Electronic)?)?;
    let trace = synthesize_benchmark_like(Pattern::ShortRange, &mesh, 64);
    print!("\n{}", write_trace(&trace[..6]));
    Ok(())
}
