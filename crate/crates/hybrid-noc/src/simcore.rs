//! Cycle-level trace-driven simulator: input-queued virtual-channel wormhole routers
//! with credit-based flow control over any [`Topology`].
//!
//! Router model: 4 VCs of 8 flits per input port, a 3-stage pipeline (route compute,
//! VC + switch allocation, switch traversal) and a link of `latency` cycles between
//! routers. A flit written into an input buffer at cycle `a` is eligible for allocation
//! at `a + 1`; a switch-allocation winner at cycle `s` reaches the next input buffer at
//! `s + 2 + latency`, or is delivered by the ejection port at `s + 2`. An uncontended
//! packet of `F` flits therefore takes `Σ latency + 3 · (links + 1) + F − 1` cycles.
//!
//! Links are ranked by direction class (south, west, east, north) and position. A packet
//! never moves to a lower VC index, and moves to a strictly higher one whenever its next
//! link ranks below the current one, so (VC, rank) increases along every route and the
//! channel dependency graph is acyclic whenever no route needs more than `NUM_VCS − 1`
//! such steps.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calib::CostCalibration;
use crate::error::{Error, Result};
use crate::routing::{compute_routes, RouteMetric, RouteTable};
use crate::techlib::TechKind;
use crate::topology::{NodeId, Topology};
use crate::traffic::PacketDescriptor;

pub const NUM_VCS: usize = 4;
pub const VC_DEPTH: u8 = 8;
pub const DEFAULT_MAX_CYCLES: u64 = 10_000_000;
pub const DEFAULT_STALL_CYCLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub max_cycles: u64,
    /// Cycles without any flit movement, while packets are outstanding, before giving up.
    pub stall_cycles: u64,
    /// Seeds the initial arbiter priorities.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_cycles: DEFAULT_MAX_CYCLES,
            stall_cycles: DEFAULT_STALL_CYCLES,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PacketRecord {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub flits: u32,
    pub inject_cycle: u64,
    pub delivered_cycle: u64,
    pub latency: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// `None` when no packet was simulated.
    pub avg_packet_latency: Option<f64>,
    /// Latency (cycles) to packet count.
    pub histogram: BTreeMap<u64, u64>,
    pub link_flits: Vec<u64>,
    pub router_flits: Vec<u64>,
    pub dynamic_energy_j: f64,
    pub sim_cycles: u64,
    pub packets: Vec<PacketRecord>,
}

impl SimResult {
    pub fn total_flits(&self) -> u64 {
        self.packets.iter().map(|p| p.flits as u64).sum()
    }

    pub fn min_latency(&self) -> Option<u64> {
        self.histogram.keys().next().copied()
    }

    pub fn max_latency(&self) -> Option<u64> {
        self.histogram.keys().next_back().copied()
    }
}

#[derive(Clone, Copy, Debug)]
struct Flit {
    pkt: u32,
    head: bool,
    tail: bool,
    ready: u64,
}

#[derive(Clone, Debug, Default)]
struct InVc {
    buf: VecDeque<Flit>,
    out: Option<(u8, u8)>,
}

#[derive(Clone, Debug)]
struct InPort {
    vcs: [InVc; NUM_VCS],
    /// Upstream router and its output port; `None` for the injection port.
    up: Option<(usize, usize)>,
    link: Option<usize>,
    latency: u32,
}

#[derive(Clone, Copy, Debug)]
struct OutVc {
    busy: bool,
    tail_sent: bool,
    credits: u8,
}

#[derive(Clone, Debug)]
struct OutPort {
    /// Link id; `None` for the ejection port.
    link: Option<usize>,
    down: (usize, usize),
    latency: u32,
    vcs: [OutVc; NUM_VCS],
}

#[derive(Clone, Debug)]
struct Router {
    ins: Vec<InPort>,
    outs: Vec<OutPort>,
    sa_in_rr: Vec<usize>,
    sa_out_rr: Vec<usize>,
    va_rr: Vec<usize>,
    buffered: usize,
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Flit { router: usize, port: usize, vc: usize, flit: Flit },
    Credit { router: usize, port: usize, vc: usize },
}

#[derive(Clone, Copy, Debug)]
struct Injecting {
    pkt: usize,
    sent: u32,
    vc: usize,
}

#[derive(Clone, Debug, Default)]
struct Nic {
    queue: VecDeque<usize>,
    current: Option<Injecting>,
    vc_rr: usize,
}

struct Sim<'a> {
    routes: &'a RouteTable,
    packets: &'a [PacketDescriptor],
    routers: Vec<Router>,
    nics: Vec<Nic>,
    /// Output port of each link at its source router.
    link_port: Vec<usize>,
    link_rank: Vec<u32>,
    /// Rank descents on the route that starts with link `l` toward `d`, at `l * n + d`.
    descents: Vec<u8>,
    moved: bool,
    ring: Vec<Vec<Event>>,
    pending: usize,
    buffered: usize,
    link_flits: Vec<u64>,
    router_flits: Vec<u64>,
    delivered: Vec<Option<u64>>,
    started: usize,
    done: usize,
}

fn validate_packets(topo: &Topology, packets: &[PacketDescriptor]) -> Result<()> {
    let n = topo.num_nodes();
    for (i, p) in packets.iter().enumerate() {
        if p.src >= n || p.dst >= n {
            return Err(Error::invalid("packet list", format!("packet {i} endpoint out of range for {n} nodes")));
        }
        if p.src == p.dst {
            return Err(Error::invalid("packet list", format!("packet {i} sends to itself")));
        }
        if p.flits == 0 {
            return Err(Error::invalid("packet list", format!("packet {i} has no flits")));
        }
        if i > 0 && packets[i - 1].inject_cycle > p.inject_cycle {
            return Err(Error::invalid("packet list", format!("packet {i} is out of inject-cycle order")));
        }
    }
    if packets.len() > u32::MAX as usize {
        return Err(Error::invalid("packet list", "too many packets"));
    }
    Ok(())
}

impl<'a> Sim<'a> {
    fn new(topo: &'a Topology, routes: &'a RouteTable, packets: &'a [PacketDescriptor], seed: u64) -> Self {
        let n = topo.num_nodes();
        let outs = topo.out_links();
        let ins = topo.in_links();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut link_port = vec![0; topo.links.len()];
        let mut link_in_port = vec![0; topo.links.len()];
        for u in 0..n {
            for (i, &l) in outs[u].iter().enumerate() {
                link_port[l] = i + 1;
            }
            for (i, &l) in ins[u].iter().enumerate() {
                link_in_port[l] = i + 1;
            }
        }
        let free = OutVc {
            busy: false,
            tail_sent: false,
            credits: VC_DEPTH,
        };
        let routers = (0..n)
            .map(|u| {
                let mut in_ports = vec![InPort {
                    vcs: Default::default(),
                    up: None,
                    link: None,
                    latency: 0,
                }];
                for &l in &ins[u] {
                    let link = &topo.links[l];
                    in_ports.push(InPort {
                        vcs: Default::default(),
                        up: Some((link.src, link_port[l])),
                        link: Some(l),
                        latency: link.latency,
                    });
                }
                let mut out_ports = vec![OutPort {
                    link: None,
                    down: (u, 0),
                    latency: 0,
                    vcs: [free; NUM_VCS],
                }];
                for &l in &outs[u] {
                    let link = &topo.links[l];
                    out_ports.push(OutPort {
                        link: Some(l),
                        down: (link.dst, link_in_port[l]),
                        latency: link.latency,
                        vcs: [free; NUM_VCS],
                    });
                }
                let ni = in_ports.len();
                let no = out_ports.len();
                Router {
                    sa_in_rr: (0..ni).map(|_| rng.random_range(0..NUM_VCS)).collect(),
                    sa_out_rr: (0..no).map(|_| rng.random_range(0..ni)).collect(),
                    va_rr: (0..no).map(|_| rng.random_range(0..ni * NUM_VCS)).collect(),
                    ins: in_ports,
                    outs: out_ports,
                    buffered: 0,
                }
            })
            .collect();
        let mut nics = vec![Nic::default(); n];
        for (i, p) in packets.iter().enumerate() {
            nics[p.src].queue.push_back(i);
        }
        let max_lat = topo.links.iter().map(|l| l.latency).max().unwrap_or(0) as usize;
        let link_rank = link_ranks(topo);
        let descents = route_descents(topo, routes, &link_rank);
        Sim {
            routes,
            packets,
            routers,
            nics,
            link_port,
            link_rank,
            descents,
            moved: false,
            ring: vec![Vec::new(); (max_lat + 4).next_power_of_two()],
            pending: 0,
            buffered: 0,
            link_flits: vec![0; topo.links.len()],
            router_flits: vec![0; n],
            delivered: vec![None; packets.len()],
            started: 0,
            done: 0,
        }
    }

    fn schedule(&mut self, at: u64, ev: Event) {
        let slot = (at as usize) & (self.ring.len() - 1);
        self.ring[slot].push(ev);
        self.pending += 1;
    }

    fn push_flit(&mut self, router: usize, port: usize, vc: usize, flit: Flit) {
        let r = &mut self.routers[router];
        let buf = &mut r.ins[port].vcs[vc].buf;
        buf.push_back(flit);
        assert!(buf.len() <= VC_DEPTH as usize, "VC buffer overflow at router {router}");
        r.buffered += 1;
        self.buffered += 1;
        self.moved = true;
    }

    fn process_events(&mut self, t: u64) {
        let slot = (t as usize) & (self.ring.len() - 1);
        let events = std::mem::take(&mut self.ring[slot]);
        self.pending -= events.len();
        for ev in &events {
            match *ev {
                Event::Flit { router, port, vc, mut flit } => {
                    flit.ready = t + 1;
                    self.push_flit(router, port, vc, flit);
                }
                Event::Credit { router, port, vc } => {
                    self.moved = true;
                    let ov = &mut self.routers[router].outs[port].vcs[vc];
                    ov.credits += 1;
                    debug_assert!(ov.credits <= VC_DEPTH);
                    if ov.tail_sent && ov.credits == VC_DEPTH {
                        ov.busy = false;
                        ov.tail_sent = false;
                    }
                }
            }
        }
        let mut events = events;
        events.clear();
        self.ring[slot] = events;
    }

    fn inject(&mut self, t: u64) {
        for u in 0..self.nics.len() {
            if self.nics[u].current.is_none() {
                let Some(&p) = self.nics[u].queue.front() else { continue };
                if self.packets[p].inject_cycle > t {
                    continue;
                }
                let start = self.nics[u].vc_rr;
                let inj = &self.routers[u].ins[0];
                let Some(vc) = (0..NUM_VCS)
                    .map(|i| (start + i) % NUM_VCS)
                    .find(|&v| inj.vcs[v].buf.is_empty() && inj.vcs[v].out.is_none())
                else {
                    continue;
                };
                self.nics[u].queue.pop_front();
                self.nics[u].current = Some(Injecting { pkt: p, sent: 0, vc });
                self.nics[u].vc_rr = (vc + 1) % NUM_VCS;
                self.started += 1;
            }
            let Some(cur) = self.nics[u].current else { continue };
            if self.routers[u].ins[0].vcs[cur.vc].buf.len() >= VC_DEPTH as usize {
                continue;
            }
            let flits = self.packets[cur.pkt].flits;
            let flit = Flit {
                pkt: cur.pkt as u32,
                head: cur.sent == 0,
                tail: cur.sent + 1 == flits,
                ready: t + 1,
            };
            self.push_flit(u, 0, cur.vc, flit);
            self.nics[u].current = (!flit.tail).then_some(Injecting { sent: cur.sent + 1, ..cur });
        }
    }

    fn allocate_vcs(&mut self, u: usize, t: u64) {
        let n = self.routers.len();
        let r = &self.routers[u];
        let total = r.ins.len() * NUM_VCS;
        // (output port, lowest and highest admissible VC)
        let mut want = [(u8::MAX, 0u8, 0u8); 8 * NUM_VCS];
        let mut any = false;
        for (ip, port) in r.ins.iter().enumerate() {
            for (v, vc) in port.vcs.iter().enumerate() {
                let Some(f) = vc.buf.front() else { continue };
                if vc.out.is_some() || !f.head || f.ready > t {
                    continue;
                }
                let dst = self.packets[f.pkt as usize].dst;
                want[ip * NUM_VCS + v] = match self.routes.next_link(u, dst) {
                    None => (0, 0, 0),
                    Some(l) => {
                        let lo = match port.link {
                            Some(prev) if self.link_rank[l] < self.link_rank[prev] => v + 1,
                            Some(_) => v,
                            None => 0,
                        };
                        let hi = (NUM_VCS - 1).saturating_sub(self.descents[l * n + dst] as usize);
                        let lo = lo.min(NUM_VCS - 1);
                        (self.link_port[l] as u8, lo as u8, hi.max(lo) as u8)
                    }
                };
                any = true;
            }
        }
        if !any {
            return;
        }
        let r = &mut self.routers[u];
        for (idx, &(op, _, _)) in want[..total].iter().enumerate() {
            if op == 0 {
                r.ins[idx / NUM_VCS].vcs[idx % NUM_VCS].out = Some((0, 0));
            }
        }
        for op in 1..r.outs.len() {
            let ptr = r.va_rr[op];
            for i in 0..total {
                let idx = (ptr + i) % total;
                let (o, lo, hi) = want[idx];
                if o as usize != op {
                    continue;
                }
                let Some(ov) = (lo as usize..=hi as usize).find(|&v| !r.outs[op].vcs[v].busy) else { continue };
                r.outs[op].vcs[ov].busy = true;
                r.ins[idx / NUM_VCS].vcs[idx % NUM_VCS].out = Some((op as u8, ov as u8));
                r.va_rr[op] = (idx + 1) % total;
            }
        }
    }

    fn allocate_switch(&mut self, u: usize, t: u64) {
        let r = &self.routers[u];
        let mut req: [Option<(usize, usize)>; 8] = [None; 8];
        for (ip, port) in r.ins.iter().enumerate() {
            for i in 0..NUM_VCS {
                let v = (r.sa_in_rr[ip] + i) % NUM_VCS;
                let vc = &port.vcs[v];
                let (Some(f), Some((op, ov))) = (vc.buf.front(), vc.out) else { continue };
                if f.ready > t {
                    continue;
                }
                if op != 0 && r.outs[op as usize].vcs[ov as usize].credits == 0 {
                    continue;
                }
                req[ip] = Some((v, op as usize));
                break;
            }
        }
        let nin = r.ins.len();
        for op in 0..r.outs.len() {
            let ptr = self.routers[u].sa_out_rr[op];
            let winner = (0..nin).map(|i| (ptr + i) % nin).find(|&ip| matches!(req[ip], Some((_, o)) if o == op));
            if let Some(ip) = winner {
                let v = req[ip].unwrap().0;
                self.traverse(u, ip, v, t);
                let r = &mut self.routers[u];
                r.sa_in_rr[ip] = (v + 1) % NUM_VCS;
                r.sa_out_rr[op] = (ip + 1) % nin;
            }
        }
    }

    fn traverse(&mut self, u: usize, ip: usize, v: usize, t: u64) {
        let r = &mut self.routers[u];
        let vc = &mut r.ins[ip].vcs[v];
        let flit = vc.buf.pop_front().expect("switch winner has a flit");
        let (op, ov) = vc.out.expect("switch winner has an output VC");
        if flit.tail {
            vc.out = None;
        }
        r.buffered -= 1;
        self.buffered -= 1;
        self.moved = true;
        self.router_flits[u] += 1;
        let up = r.ins[ip].up;
        let in_lat = r.ins[ip].latency;
        let (op, ov) = (op as usize, ov as usize);
        let out = &mut r.outs[op];
        let (link, down, out_lat) = (out.link, out.down, out.latency);
        if let Some(l) = link {
            let ovc = &mut out.vcs[ov];
            ovc.credits -= 1;
            if flit.tail {
                ovc.tail_sent = true;
            }
            self.link_flits[l] += 1;
            self.schedule(
                t + 2 + out_lat as u64,
                Event::Flit {
                    router: down.0,
                    port: down.1,
                    vc: ov,
                    flit,
                },
            );
        } else if flit.tail {
            self.delivered[flit.pkt as usize] = Some(t + 2);
            self.done += 1;
        }
        if let Some((ur, uport)) = up {
            self.schedule(t + in_lat as u64, Event::Credit { router: ur, port: uport, vc: v });
        }
    }

    fn next_injection(&self) -> Option<u64> {
        self.nics.iter().filter_map(|n| n.queue.front()).map(|&p| self.packets[p].inject_cycle).min()
    }

    fn run(&mut self, max_cycles: u64, stall_cycles: u64) -> Result<()> {
        let mut t = match self.next_injection() {
            Some(c) => c,
            None => return Ok(()),
        };
        let mut last_move = t;
        while self.done < self.packets.len() {
            if t.saturating_sub(last_move) >= stall_cycles {
                return Err(Error::Stalled {
                    cycle: t,
                    in_flight: self.started - self.done,
                    buffered: self.buffered,
                });
            }
            if t >= max_cycles {
                return Err(Error::Timeout {
                    cycles: max_cycles,
                    in_flight: self.started - self.done,
                    buffered: self.buffered,
                });
            }
            self.moved = false;
            self.process_events(t);
            self.inject(t);
            for u in 0..self.routers.len() {
                if self.routers[u].buffered > 0 {
                    self.allocate_vcs(u, t);
                    self.allocate_switch(u, t);
                }
            }
            if self.moved {
                last_move = t;
            }
            let idle = self.buffered == 0 && self.pending == 0 && self.nics.iter().all(|n| n.current.is_none());
            t = match (idle, self.next_injection()) {
                (true, Some(c)) => {
                    last_move = c;
                    c.max(t + 1)
                }
                _ => t + 1,
            };
        }
        Ok(())
    }
}

fn link_class(topo: &Topology, l: &crate::topology::Link) -> (u8, i64) {
    let (a, b) = (topo.coord(l.src), topo.coord(l.dst));
    let (dx, dy) = (b.x as i64 - a.x as i64, b.y as i64 - a.y as i64);
    if dx == 0 && dy < 0 {
        (0, -(a.y as i64))
    } else if dx < 0 {
        (1, -(a.x as i64))
    } else if dx > 0 {
        (2, a.x as i64)
    } else {
        (3, a.y as i64)
    }
}

/// Strict total order on links used for VC ordering.
fn link_ranks(topo: &Topology) -> Vec<u32> {
    let mut ids: Vec<usize> = (0..topo.links.len()).collect();
    ids.sort_by_key(|&l| (link_class(topo, &topo.links[l]), l));
    let mut rank = vec![0; ids.len()];
    for (r, &l) in ids.iter().enumerate() {
        rank[l] = r as u32;
    }
    rank
}

fn route_descents(topo: &Topology, routes: &RouteTable, rank: &[u32]) -> Vec<u8> {
    const UNSET: u8 = u8::MAX;
    let n = topo.num_nodes();
    let mut out = vec![UNSET; topo.links.len() * n];
    let mut chain = Vec::new();
    for d in 0..n {
        for l0 in 0..topo.links.len() {
            chain.clear();
            let mut l = l0;
            let mut tail = 0u8;
            loop {
                if out[l * n + d] != UNSET {
                    tail = out[l * n + d];
                    break;
                }
                chain.push(l);
                match routes.next_link(topo.links[l].dst, d) {
                    Some(next) => l = next,
                    None => break,
                }
            }
            // `l` is either a memoized link or the last link of the chain.
            let mut after = (l, tail);
            for &c in chain.iter().rev() {
                let v = if c == after.0 {
                    after.1
                } else {
                    after.1.saturating_add((rank[after.0] < rank[c]) as u8)
                };
                out[c * n + d] = v;
                after = (c, v);
            }
        }
    }
    out
}

/// Largest number of VC-rank descents on any route; the scheme is deadlock-free when
/// this is below [`NUM_VCS`].
pub fn max_route_descents(topo: &Topology, routes: &RouteTable) -> u8 {
    route_descents(topo, routes, &link_ranks(topo)).into_iter().max().unwrap_or(0)
}

/// Dynamic energy of the given link and router traversal counts.
pub fn traversal_energy_j(topo: &Topology, link_flits: &[u64], router_flits: &[u64], calib: &CostCalibration) -> Result<f64> {
    let mut e = 0.0;
    for (l, &c) in topo.links.iter().zip(link_flits) {
        if c > 0 {
            e += c as f64 * calib.link_dyn_j(l)?;
        }
    }
    for (&ports, &c) in topo.router_ports.iter().zip(router_flits) {
        if c > 0 {
            e += c as f64 * calib.router(ports)?.dyn_j_per_flit;
        }
    }
    Ok(e)
}

/// Runs `packets` (sorted by inject cycle) to completion.
pub fn simulate(topo: &Topology, routes: &RouteTable, packets: &[PacketDescriptor], calib: &CostCalibration, config: &SimConfig) -> Result<SimResult> {
    validate_packets(topo, packets)?;
    if routes.num_nodes() != topo.num_nodes() {
        return Err(Error::invalid("route table", "node count differs from topology"));
    }
    for p in packets {
        if p.src != p.dst && routes.next_link(p.src, p.dst).is_none() {
            return Err(Error::Unreachable { src: p.src, dst: p.dst });
        }
    }
    let mut sim = Sim::new(topo, routes, packets, config.seed);
    sim.run(config.max_cycles, config.stall_cycles)?;
    let mut histogram = BTreeMap::new();
    let mut records = Vec::with_capacity(packets.len());
    let mut sum = 0u128;
    let mut last = 0;
    for (i, p) in packets.iter().enumerate() {
        let d = sim.delivered[i].expect("all packets delivered");
        let lat = d - p.inject_cycle;
        sum += lat as u128;
        last = last.max(d);
        *histogram.entry(lat).or_insert(0) += 1;
        records.push(PacketRecord {
            id: i,
            src: p.src,
            dst: p.dst,
            flits: p.flits,
            inject_cycle: p.inject_cycle,
            delivered_cycle: d,
            latency: lat,
        });
    }
    let dynamic_energy_j = traversal_energy_j(topo, &sim.link_flits, &sim.router_flits, calib)?;
    Ok(SimResult {
        avg_packet_latency: (!packets.is_empty()).then(|| sum as f64 / packets.len() as f64),
        histogram,
        link_flits: sim.link_flits,
        router_flits: sim.router_flits,
        dynamic_energy_j,
        sim_cycles: last,
        packets: records,
    })
}

/// Uncontended latency of a packet: route latency plus serialization.
pub fn zero_load_latency(routes: &RouteTable, p: &PacketDescriptor) -> u64 {
    routes.route_latency(p.src, p.dst) as u64 + p.flits as u64 - 1
}

/// Per-link and per-router flit counts implied by routing every packet on its route.
pub fn analytical_traversals(topo: &Topology, routes: &RouteTable, packets: &[PacketDescriptor]) -> (Vec<u64>, Vec<u64>) {
    let n = topo.num_nodes();
    let mut pair = vec![0u64; n * n];
    for p in packets {
        pair[p.src * n + p.dst] += p.flits as u64;
    }
    let mut links = vec![0u64; topo.links.len()];
    let mut routers = vec![0u64; n];
    for s in 0..n {
        for d in 0..n {
            let f = pair[s * n + d];
            if f == 0 {
                continue;
            }
            routers[s] += f;
            for l in routes.route(topo, s, d) {
                links[l] += f;
                routers[topo.links[l].dst] += f;
            }
        }
    }
    (links, routers)
}

/// Dynamic energy of a trace without contention modelling; equals the simulated
/// energy whenever the simulation drains.
pub fn analytical_trace_energy(topo: &Topology, routes: &RouteTable, packets: &[PacketDescriptor], calib: &CostCalibration) -> Result<f64> {
    let (links, routers) = analytical_traversals(topo, routes, packets);
    traversal_energy_j(topo, &links, &routers, calib)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyRow {
    pub topology: String,
    pub packets: usize,
    pub flits: u64,
    pub avg_latency: Option<f64>,
    pub min_latency: Option<u64>,
    pub max_latency: Option<u64>,
    /// Baseline average latency over this one; the first row is the baseline.
    pub speedup: Option<f64>,
    pub dynamic_energy_j: f64,
    pub sim_cycles: u64,
}

/// Replays one trace on each topology, in parallel, with latency-minimal routes.
pub fn compare_latency(topologies: &[(String, Topology)], packets: &[PacketDescriptor], calib: &CostCalibration, config: &SimConfig) -> Result<Vec<(LatencyRow, SimResult)>> {
    let results: Vec<SimResult> = topologies
        .par_iter()
        .map(|(_, t)| {
            let routes = compute_routes(t, RouteMetric::Latency)?;
            simulate(t, &routes, packets, calib, config)
        })
        .collect::<Result<_>>()?;
    let base = results.first().and_then(|r| r.avg_packet_latency);
    Ok(topologies
        .iter()
        .zip(results)
        .map(|((name, _), r)| {
            let row = LatencyRow {
                topology: name.clone(),
                packets: r.packets.len(),
                flits: r.total_flits(),
                avg_latency: r.avg_packet_latency,
                min_latency: r.min_latency(),
                max_latency: r.max_latency(),
                speedup: base.zip(r.avg_packet_latency).map(|(b, a)| b / a),
                dynamic_energy_j: r.dynamic_energy_j,
                sim_cycles: r.sim_cycles,
            };
            (row, r)
        })
        .collect())
}

pub fn write_sim_report<W: Write>(w: W, rows: &[LatencyRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_packet_dump<W: Write>(w: W, records: &[PacketRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Dynamic energy of one network variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyEntry {
    /// `None` for the plain base mesh.
    pub express: Option<(TechKind, usize)>,
    pub energy_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReportRow {
    pub network: String,
    pub hops: usize,
    pub energy_j: f64,
    pub relative_to_base: f64,
}

/// Energy table with the base mesh first, then express variants by technology and hops.
pub fn dynamic_energy_report(entries: &[EnergyEntry]) -> Result<Vec<EnergyReportRow>> {
    let base = entries
        .iter()
        .find(|e| e.express.is_none())
        .ok_or_else(|| Error::invalid("energy report", "no base mesh entry"))?
        .energy_j;
    let mut sorted: Vec<&EnergyEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.express);
    Ok(sorted
        .into_iter()
        .map(|e| EnergyReportRow {
            network: e.express.map_or("base".to_string(), |(t, _)| format!("{t} express")),
            hops: e.express.map_or(0, |x| x.1),
            energy_j: e.energy_j,
            relative_to_base: if base > 0.0 { e.energy_j / base } else { 0.0 },
        })
        .collect())
}

pub fn write_energy_report<W: Write>(w: W, rows: &[EnergyReportRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::techlib::ProfileSet;
    use crate::topology::{add_express_links, build_mesh};

    fn mesh(k: usize, tech: TechKind) -> Topology {
        build_mesh(k, ProfileSet::builtin().get(tech).unwrap()).unwrap()
    }

    fn one(src: NodeId, dst: NodeId, flits: u32) -> Vec<PacketDescriptor> {
        vec![PacketDescriptor {
            inject_cycle: 0,
            src,
            dst,
            flits,
        }]
    }

    fn run(t: &Topology, p: &[PacketDescriptor]) -> SimResult {
        let r = compute_routes(t, RouteMetric::Latency).unwrap();
        simulate(t, &r, p, &CostCalibration::builtin(), &SimConfig::default()).unwrap()
    }

    #[test]
    fn adjacent_single_flit_golden() {
        let e = run(&mesh(4, TechKind::Electronic), &one(0, 1, 1));
        assert_eq!(e.packets[0].latency, 7);
        let h = run(&mesh(4, TechKind::HyPPI), &one(0, 1, 1));
        assert_eq!(h.packets[0].latency, 8);
    }

    #[test]
    fn long_packet_serializes() {
        let t = mesh(4, TechKind::Electronic);
        let r = run(&t, &one(0, 15, 32));
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        assert_eq!(r.packets[0].latency, zero_load_latency(&routes, &one(0, 15, 32)[0]));
        assert_eq!(r.packets[0].latency, 6 + 3 * 7 + 31);
    }

    #[test]
    fn empty_trace() {
        let r = run(&mesh(2, TechKind::Electronic), &[]);
        assert_eq!(r.avg_packet_latency, None);
        assert_eq!(r.dynamic_energy_j, 0.0);
        assert_eq!(r.sim_cycles, 0);
    }

    #[test]
    fn express_link_shortcut() {
        let set = ProfileSet::builtin();
        let t = add_express_links(&mesh(16, TechKind::Electronic), 15, set.get(TechKind::HyPPI).unwrap()).unwrap();
        let r = run(&t, &one(0, 15, 1));
        assert_eq!(r.packets[0].latency, 2 + 6);
    }

    #[test]
    fn malformed_packets_rejected() {
        let t = mesh(2, TechKind::Electronic);
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        let cal = CostCalibration::builtin();
        let cfg = SimConfig::default();
        assert!(simulate(&t, &routes, &one(1, 1, 1), &cal, &cfg).is_err());
        assert!(simulate(&t, &routes, &one(0, 9, 1), &cal, &cfg).is_err());
        assert!(simulate(&t, &routes, &one(0, 1, 0), &cal, &cfg).is_err());
        let mut two = one(0, 1, 1);
        two.insert(0, PacketDescriptor { inject_cycle: 5, ..two[0] });
        assert!(simulate(&t, &routes, &two, &cal, &cfg).is_err());
    }

    #[test]
    fn cycle_cap_times_out() {
        let t = mesh(4, TechKind::Electronic);
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        let cfg = SimConfig { max_cycles: 5, ..SimConfig::default() };
        let err = simulate(&t, &routes, &one(0, 15, 32), &CostCalibration::builtin(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Timeout { in_flight: 1, .. }));
    }

    #[test]
    fn hotspot_drains_and_conserves() {
        let t = mesh(4, TechKind::Electronic);
        let mut p = Vec::new();
        for c in 0..20 {
            for s in 1..16 {
                p.push(PacketDescriptor {
                    inject_cycle: c,
                    src: s,
                    dst: 0,
                    flits: if s % 3 == 0 { 32 } else { 1 },
                });
            }
        }
        let r = run(&t, &p);
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        let (links, routers) = analytical_traversals(&t, &routes, &p);
        assert_eq!(r.link_flits, links);
        assert_eq!(r.router_flits, routers);
        for (rec, pk) in r.packets.iter().zip(&p) {
            assert!(rec.latency >= zero_load_latency(&routes, pk));
        }
        let e = analytical_trace_energy(&t, &routes, &p, &CostCalibration::builtin()).unwrap();
        assert!((r.dynamic_energy_j - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn energy_report_layout() {
        let rows = dynamic_energy_report(&[
            EnergyEntry {
                express: Some((TechKind::HyPPI, 3)),
                energy_j: 3.0,
            },
            EnergyEntry { express: None, energy_j: 2.0 },
        ])
        .unwrap();
        assert_eq!(rows[0].network, "base");
        assert_eq!(rows[1].relative_to_base, 1.5);
        assert!(dynamic_energy_report(&[]).is_err());
    }
}
