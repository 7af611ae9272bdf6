//! Builds a 16×16 electronic mesh with HyPPI express links, prints its summary and
//! writes it in the text topology format.

use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{add_express_links, aggregate_capability, build_mesh, from_text, to_text, LinkRole};

fn main() -> hybrid_noc::Result<()> {
    let profiles = ProfileSet::builtin();
    let mesh = build_mesh(16, profiles.get(TechKind::Electronic)?)?;
    println!("mesh: {} links, capability {} Gb/s/node", mesh.links.len(), aggregate_capability(&mesh));
    for hops in [3, 5, 15] {
        let t = add_express_links(&mesh, hops, profiles.get(TechKind::HyPPI)?)?;
        let express = t.links.iter().filter(|l| l.role == LinkRole::Express).count();
        let hybrid = t.router_ports.iter().filter(|&&p| p == 7).count();
        println!(
            "hops {hops:>2}: {express} express links, {hybrid} seven-port routers, capability {} Gb/s/node",
            aggregate_capability(&t)
        );
    }
    let small = add_express_links(&build_mesh(4, profiles.get(TechKind::Electronic)?)?, 3, profiles.get(TechKind::HyPPI)?)?;
    let text = to_text(&small);
    assert_eq!(from_text(&text, "<memory>")?, small);
    print!("\n{}", text.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!("\n... ({} lines)", text.lines().count());
    Ok(())
}
