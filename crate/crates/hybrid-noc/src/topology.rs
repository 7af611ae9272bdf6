//! Mesh and mesh-plus-express-link topologies and their text serialization.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::techlib::{link_cost, LinkMode, TechKind, TechnologyProfile};

pub type NodeId = usize;

pub const BASE_PORTS: u8 = 5;
pub const HYBRID_PORTS: u8 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkRole {
    Base,
    Express,
}

impl LinkRole {
    pub fn name(self) -> &'static str {
        match self {
            LinkRole::Base => "base",
            LinkRole::Express => "express",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub role: LinkRole,
    pub length_mm: f64,
    pub tech: TechKind,
    /// Clock cycles.
    pub latency: u32,
    pub capacity_gbps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub k: usize,
    pub core_spacing_mm: f64,
    pub express_hops: Option<usize>,
    pub links: Vec<Link>,
    pub router_ports: Vec<u8>,
}

impl Topology {
    pub fn num_nodes(&self) -> usize {
        self.k * self.k
    }

    pub fn coord(&self, id: NodeId) -> Coord {
        Coord {
            x: id % self.k,
            y: id / self.k,
        }
    }

    pub fn node_id(&self, c: Coord) -> NodeId {
        c.y * self.k + c.x
    }

    /// Base-mesh Manhattan distance.
    pub fn manhattan(&self, a: NodeId, b: NodeId) -> usize {
        let (ca, cb) = (self.coord(a), self.coord(b));
        ca.x.abs_diff(cb.x) + ca.y.abs_diff(cb.y)
    }

    pub fn base_tech(&self) -> Option<TechKind> {
        self.links.iter().find(|l| l.role == LinkRole::Base).map(|l| l.tech)
    }

    pub fn express_tech(&self) -> Option<TechKind> {
        self.links.iter().find(|l| l.role == LinkRole::Express).map(|l| l.tech)
    }

    pub fn express_links(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().filter(|l| l.role == LinkRole::Express)
    }

    /// Outgoing link ids per node, in link-id order.
    pub fn out_links(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_nodes()];
        for l in &self.links {
            out[l.src].push(l.id);
        }
        out
    }

    /// Incoming link ids per node, in link-id order.
    pub fn in_links(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.num_nodes()];
        for l in &self.links {
            inc[l.dst].push(l.id);
        }
        inc
    }

    /// Checks structural invariants: id ordering, reverse pairing, adjacency and port counts.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.router_ports.len() != n {
            return Err(Error::invalid("topology", "router_ports length differs from node count"));
        }
        for (i, l) in self.links.iter().enumerate() {
            if l.id != i {
                return Err(Error::invalid("topology", format!("link {i} carries id {}", l.id)));
            }
            if l.src >= n || l.dst >= n || l.src == l.dst {
                return Err(Error::invalid("topology", format!("link {i} has bad endpoints")));
            }
            let (a, b) = (self.coord(l.src), self.coord(l.dst));
            let ok = match l.role {
                LinkRole::Base => self.manhattan(l.src, l.dst) == 1,
                LinkRole::Express => a.y == b.y && Some(a.x.abs_diff(b.x)) == self.express_hops,
            };
            if !ok {
                return Err(Error::invalid("topology", format!("link {i} violates {} adjacency", l.role.name())));
            }
            let paired = self
                .links
                .iter()
                .filter(|r| r.src == l.dst && r.dst == l.src && r.role == l.role && r.tech == l.tech && r.length_mm == l.length_mm)
                .count();
            if paired != 1 {
                return Err(Error::invalid("topology", format!("link {i} lacks a unique reverse link")));
            }
        }
        let mut has_express = vec![false; n];
        for l in self.express_links() {
            has_express[l.src] = true;
        }
        for (id, &p) in self.router_ports.iter().enumerate() {
            let want = if has_express[id] { HYBRID_PORTS } else { BASE_PORTS };
            if p != want {
                return Err(Error::invalid("topology", format!("router {id} has {p} ports, expected {want}")));
            }
        }
        Ok(())
    }
}

fn noc_link_capacity(profile: &TechnologyProfile, length_mm: f64) -> Result<f64> {
    // Capacity does not depend on the loss budget, so probe a short length to avoid
    // rejecting links that are merely infeasible for the laser.
    let probe = length_mm.min(1e-3);
    Ok(link_cost(profile, probe, LinkMode::NocLink)?.capacity_gbps)
}

/// Plain k×k mesh with 1 mm core spacing.
pub fn build_mesh(k: usize, base: &TechnologyProfile) -> Result<Topology> {
    build_mesh_spaced(k, base, 1.0)
}

pub fn build_mesh_spaced(k: usize, base: &TechnologyProfile, core_spacing_mm: f64) -> Result<Topology> {
    if k < 2 {
        return Err(Error::invalid("mesh size", format!("k = {k}, need k >= 2")));
    }
    if !(core_spacing_mm > 0.0) {
        return Err(Error::invalid("core spacing", format!("{core_spacing_mm} mm")));
    }
    let capacity = noc_link_capacity(base, core_spacing_mm)?;
    let mut links = Vec::with_capacity(4 * k * (k - 1));
    for y in 0..k {
        for x in 0..k {
            let n = y * k + x;
            let steps: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (dx, dy) in steps {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= k as isize || ny >= k as isize {
                    continue;
                }
                links.push(Link {
                    id: links.len(),
                    src: n,
                    dst: ny as usize * k + nx as usize,
                    role: LinkRole::Base,
                    length_mm: core_spacing_mm,
                    tech: base.kind,
                    latency: base.kind.noc_latency_clk(),
                    capacity_gbps: capacity,
                });
            }
        }
    }
    Ok(Topology {
        k,
        core_spacing_mm,
        express_hops: None,
        links,
        router_ports: vec![BASE_PORTS; k * k],
    })
}

/// Adds horizontal express links chained from column 0 in strides of `hops`.
pub fn add_express_links(topo: &Topology, hops: usize, express: &TechnologyProfile) -> Result<Topology> {
    let k = topo.k;
    if hops < 2 || hops > k - 1 {
        return Err(Error::invalid("express hops", format!("{hops} outside 2..={}", k - 1)));
    }
    if topo.express_hops.is_some() {
        return Err(Error::invalid("express hops", "topology already has express links"));
    }
    let length = hops as f64 * topo.core_spacing_mm;
    let capacity = noc_link_capacity(express, length)?;
    let mut out = topo.clone();
    out.express_hops = Some(hops);
    for y in 0..k {
        let mut c = 0;
        while c + hops < k {
            let a = y * k + c;
            let b = a + hops;
            for (src, dst) in [(a, b), (b, a)] {
                out.links.push(Link {
                    id: out.links.len(),
                    src,
                    dst,
                    role: LinkRole::Express,
                    length_mm: length,
                    tech: express.kind,
                    latency: express.kind.noc_latency_clk(),
                    capacity_gbps: capacity,
                });
            }
            out.router_ports[a] = HYBRID_PORTS;
            out.router_ports[b] = HYBRID_PORTS;
            c += hops;
        }
    }
    Ok(out)
}

/// Σ link capacity / N, in Gb/s per node.
pub fn aggregate_capability(topo: &Topology) -> f64 {
    let total: f64 = topo.links.iter().map(|l| l.capacity_gbps).sum();
    total / topo.num_nodes() as f64
}

const HEADER: &str = "# hybrid-noc topology v1";

/// Line-oriented text form: a `topology` header, then `node` and `link` records.
pub fn to_text(topo: &Topology) -> String {
    let mut s = String::new();
    let hops = topo.express_hops.map_or("none".to_string(), |h| h.to_string());
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "topology k={} core_spacing_mm={} express_hops={hops}", topo.k, topo.core_spacing_mm);
    for id in 0..topo.num_nodes() {
        let c = topo.coord(id);
        let _ = writeln!(s, "node {id} {} {} {}", c.x, c.y, topo.router_ports[id]);
    }
    for l in &topo.links {
        let _ = writeln!(
            s,
            "link {} {} {} {} {} {} {} {}",
            l.id,
            l.src,
            l.dst,
            l.role.name(),
            l.length_mm,
            l.tech,
            l.latency,
            l.capacity_gbps
        );
    }
    s
}

pub fn from_text(text: &str, origin: &str) -> Result<Topology> {
    let perr = |line: usize, reason: String| Error::Parse {
        path: origin.to_string(),
        line,
        reason,
    };
    let mut header: Option<(usize, f64, Option<usize>)> = None;
    let mut nodes: Vec<(usize, usize, usize, u8)> = Vec::new();
    let mut links = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<usize> {
            fields
                .get(i)
                .ok_or_else(|| perr(lineno, format!("missing field {i}")))?
                .parse()
                .map_err(|e| perr(lineno, format!("field {i}: {e}")))
        };
        let float = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .ok_or_else(|| perr(lineno, format!("missing field {i}")))?
                .parse()
                .map_err(|e| perr(lineno, format!("field {i}: {e}")))
        };
        match fields[0] {
            "topology" => {
                let mut k = None;
                let mut spacing = 1.0;
                let mut hops = None;
                for kv in &fields[1..] {
                    let (key, val) = kv.split_once('=').ok_or_else(|| perr(lineno, format!("expected key=value, got `{kv}`")))?;
                    match key {
                        "k" => k = Some(val.parse().map_err(|e| perr(lineno, format!("k: {e}")))?),
                        "core_spacing_mm" => spacing = val.parse().map_err(|e| perr(lineno, format!("core_spacing_mm: {e}")))?,
                        "express_hops" if val == "none" => hops = None,
                        "express_hops" => hops = Some(val.parse().map_err(|e| perr(lineno, format!("express_hops: {e}")))?),
                        other => return Err(perr(lineno, format!("unknown key `{other}`"))),
                    }
                }
                let k = k.ok_or_else(|| perr(lineno, "topology record needs k".into()))?;
                header = Some((k, spacing, hops));
            }
            "node" => {
                if fields.len() != 5 {
                    return Err(perr(lineno, "node record needs 4 fields".into()));
                }
                let ports: u8 = fields[4].parse().map_err(|e| perr(lineno, format!("ports: {e}")))?;
                nodes.push((num(1)?, num(2)?, num(3)?, ports));
            }
            "link" => {
                if fields.len() != 9 {
                    return Err(perr(lineno, "link record needs 8 fields".into()));
                }
                let role = match fields[4] {
                    "base" => LinkRole::Base,
                    "express" => LinkRole::Express,
                    other => return Err(perr(lineno, format!("unknown role `{other}`"))),
                };
                let tech: TechKind = fields[6].parse().map_err(|e: Error| perr(lineno, e.to_string()))?;
                links.push(Link {
                    id: num(1)?,
                    src: num(2)?,
                    dst: num(3)?,
                    role,
                    length_mm: float(5)?,
                    tech,
                    latency: num(7)? as u32,
                    capacity_gbps: float(8)?,
                });
            }
            other => return Err(perr(lineno, format!("unknown record `{other}`"))),
        }
    }
    let (k, core_spacing_mm, express_hops) = header.ok_or_else(|| perr(0, "missing topology record".into()))?;
    let n = k * k;
    let mut router_ports = vec![0u8; n];
    for (id, x, y, ports) in nodes {
        if id >= n || id != y * k + x {
            return Err(perr(0, format!("node {id} at ({x},{y}) inconsistent with k={k}")));
        }
        router_ports[id] = ports;
    }
    let topo = Topology {
        k,
        core_spacing_mm,
        express_hops,
        links,
        router_ports,
    };
    topo.validate()?;
    Ok(topo)
}

pub fn load(path: &Path) -> Result<Topology> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, &path.display().to_string())
}
