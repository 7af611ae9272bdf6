//! Deterministic oblivious shortest-path routing and per-link load accumulation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{LinkRole, NodeId, Topology};
use crate::traffic::TrafficSpec;

/// Router pipeline depth in cycles, charged once per traversed router.
pub const ROUTER_DELAY: u32 = 3;
pub const CLOCK_GHZ: f64 = 0.78125;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteMetric {
    /// Link latency plus router delay per traversal.
    #[default]
    Latency,
    /// Link count.
    Hops,
}

/// Destination-based next-hop table. Every route is a path in the shortest-path
/// in-tree of its destination, so sub-routes of routes are routes.
#[derive(Clone, Debug)]
pub struct RouteTable {
    n: usize,
    metric: RouteMetric,
    next: Vec<u32>,
    cost: Vec<u32>,
    hops: Vec<u32>,
    link_latency_sum: Vec<u32>,
}

impl RouteTable {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> RouteMetric {
        self.metric
    }

    /// Link leaving `at` toward `dst`, or `None` when `at == dst`.
    pub fn next_link(&self, at: NodeId, dst: NodeId) -> Option<usize> {
        let v = self.next[at * self.n + dst];
        (v != NONE).then_some(v as usize)
    }

    pub fn route(&self, topo: &Topology, src: NodeId, dst: NodeId) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.hops(src, dst) as usize);
        let mut u = src;
        while let Some(l) = self.next_link(u, dst) {
            out.push(l);
            u = topo.links[l].dst;
        }
        out
    }

    pub fn hops(&self, src: NodeId, dst: NodeId) -> u32 {
        self.hops[src * self.n + dst]
    }

    /// Metric value of the route.
    pub fn cost(&self, src: NodeId, dst: NodeId) -> u32 {
        self.cost[src * self.n + dst]
    }

    /// Σ link latency + router delay × (links + 1); zero for `src == dst`.
    pub fn route_latency(&self, src: NodeId, dst: NodeId) -> u32 {
        if src == dst {
            return 0;
        }
        self.link_latency_sum[src * self.n + dst] + ROUTER_DELAY * (self.hops(src, dst) + 1)
    }
}

fn link_weight(metric: RouteMetric, latency: u32) -> u32 {
    match metric {
        RouteMetric::Latency => latency + ROUTER_DELAY,
        RouteMetric::Hops => 1,
    }
}

struct DestTree {
    next: Vec<u32>,
    cost: Vec<u32>,
    hops: Vec<u32>,
    lat: Vec<u32>,
}

fn tree_to(topo: &Topology, inc: &[Vec<usize>], out: &[Vec<usize>], metric: RouteMetric, d: NodeId) -> Result<DestTree> {
    let n = topo.num_nodes();
    let mut dist = vec![(u32::MAX, u32::MAX); n];
    let mut done = vec![false; n];
    dist[d] = (0, 0);
    let mut pq = BinaryHeap::new();
    pq.push(Reverse((0u32, 0u32, d)));
    while let Some(Reverse((c, h, u))) = pq.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &li in &inc[u] {
            let l = &topo.links[li];
            let cand = (c + link_weight(metric, l.latency), h + 1);
            if cand < dist[l.src] {
                dist[l.src] = cand;
                pq.push(Reverse((cand.0, cand.1, l.src)));
            }
        }
    }
    let mut next = vec![NONE; n];
    for u in 0..n {
        if u == d {
            continue;
        }
        if !done[u] {
            return Err(Error::Unreachable { src: u, dst: d });
        }
        let mut best: Option<((u32, u32, usize), usize)> = None;
        for &li in &out[u] {
            let l = &topo.links[li];
            let (cv, hv) = dist[l.dst];
            if cv == u32::MAX {
                continue;
            }
            let key = (cv + link_weight(metric, l.latency), hv + 1, l.dst);
            if best.as_ref().is_none_or(|(bk, _)| key < *bk) {
                best = Some((key, li));
            }
        }
        let (key, li) = best.ok_or(Error::Unreachable { src: u, dst: d })?;
        debug_assert_eq!((key.0, key.1), dist[u]);
        next[u] = li as u32;
    }
    // Link-latency sums follow the tree in increasing cost order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (dist[u], u));
    let mut lat = vec![0u32; n];
    for &u in &order {
        if u != d {
            let l = &topo.links[next[u] as usize];
            lat[u] = lat[l.dst] + l.latency;
        }
    }
    Ok(DestTree {
        next,
        cost: dist.iter().map(|x| x.0).collect(),
        hops: dist.iter().map(|x| x.1).collect(),
        lat,
    })
}

/// Shortest paths under `metric`, ties broken by fewer hops, then lower next-node id.
pub fn compute_routes(topo: &Topology, metric: RouteMetric) -> Result<RouteTable> {
    let n = topo.num_nodes();
    let inc = topo.in_links();
    let out = topo.out_links();
    let trees: Vec<DestTree> = (0..n)
        .into_par_iter()
        .map(|d| tree_to(topo, &inc, &out, metric, d))
        .collect::<Result<_>>()?;
    let mut t = RouteTable {
        n,
        metric,
        next: vec![NONE; n * n],
        cost: vec![0; n * n],
        hops: vec![0; n * n],
        link_latency_sum: vec![0; n * n],
    };
    for (d, tree) in trees.into_iter().enumerate() {
        for u in 0..n {
            let i = u * n + d;
            t.next[i] = tree.next[u];
            t.cost[i] = tree.cost[u];
            t.hops[i] = tree.hops[u];
            t.link_latency_sum[i] = tree.lat[u];
        }
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkLoadMap {
    /// Flits per cycle.
    pub flit_rate: Vec<f64>,
    /// Rate over link capacity in flits per cycle; not clamped.
    pub utilization: Vec<f64>,
}

impl LinkLoadMap {
    pub fn mean_utilization(&self) -> f64 {
        if self.utilization.is_empty() {
            return 0.0;
        }
        self.utilization.iter().sum::<f64>() / self.utilization.len() as f64
    }
}

/// Link capacity in flits per cycle.
pub fn flits_per_cycle(capacity_gbps: f64, flit_bits: u32, clock_ghz: f64) -> f64 {
    capacity_gbps / flit_bits as f64 / clock_ghz
}

pub fn accumulate_loads(topo: &Topology, routes: &RouteTable, traffic: &TrafficSpec) -> LinkLoadMap {
    accumulate_loads_at(topo, routes, traffic, 64, CLOCK_GHZ)
}

/// Per-link flit rate: Σ rate(s,d) over pairs whose route uses the link.
pub fn accumulate_loads_at(topo: &Topology, routes: &RouteTable, traffic: &TrafficSpec, flit_bits: u32, clock_ghz: f64) -> LinkLoadMap {
    let n = topo.num_nodes();
    assert_eq!(n, routes.num_nodes());
    assert_eq!(n, traffic.num_nodes());
    let mut rate = vec![0.0; topo.links.len()];
    let mut carry = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for d in 0..n {
        // Push each node's demand toward d along the in-tree, farthest nodes first.
        order.sort_by_key(|&u| (Reverse(routes.cost(u, d)), Reverse(routes.hops(u, d)), u));
        for u in 0..n {
            carry[u] = traffic.rate(u, d);
        }
        for &u in &order {
            if let Some(l) = routes.next_link(u, d) {
                let c = carry[u];
                if c != 0.0 {
                    rate[l] += c;
                    carry[topo.links[l].dst] += c;
                }
            }
        }
    }
    let utilization = topo
        .links
        .iter()
        .zip(&rate)
        .map(|(l, r)| r / flits_per_cycle(l.capacity_gbps, flit_bits, clock_ghz))
        .collect();
    LinkLoadMap {
        flit_rate: rate,
        utilization,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UtilizationRow {
    pub link_id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub role: LinkRole,
    pub flit_rate: f64,
    pub utilization: f64,
}

pub fn utilization_rows(topo: &Topology, load: &LinkLoadMap) -> Vec<UtilizationRow> {
    topo.links
        .iter()
        .map(|l| UtilizationRow {
            link_id: l.id,
            src: l.src,
            dst: l.dst,
            role: l.role,
            flit_rate: load.flit_rate[l.id],
            utilization: load.utilization[l.id],
        })
        .collect()
}

pub fn write_utilization_csv<W: Write>(w: W, topo: &Topology, load: &LinkLoadMap) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in utilization_rows(topo, load) {
        wr.serialize(row)?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::techlib::{ProfileSet, TechKind};
    use crate::topology::{add_express_links, build_mesh};

    fn prof(k: TechKind) -> crate::techlib::TechnologyProfile {
        ProfileSet::builtin().get(k).unwrap().clone()
    }

    #[test]
    fn two_by_two_tie_break() {
        let t = build_mesh(2, &prof(TechKind::Electronic)).unwrap();
        let r = compute_routes(&t, RouteMetric::Latency).unwrap();
        let route = r.route(&t, 0, 3);
        assert_eq!(route.len(), 2);
        // both neighbours 1 and 2 tie; lower id wins
        assert_eq!(t.links[route[0]].dst, 1);
        assert!(r.route(&t, 2, 2).is_empty());
        assert_eq!(r.route_latency(0, 3), 2 + 3 * 3);
    }

    #[test]
    fn torus_like_express_shortcut() {
        let m = build_mesh(16, &prof(TechKind::Electronic)).unwrap();
        let t = add_express_links(&m, 15, &prof(TechKind::HyPPI)).unwrap();
        let r = compute_routes(&t, RouteMetric::Latency).unwrap();
        let route = r.route(&t, 0, 15);
        assert_eq!(route.len(), 1);
        assert_eq!(t.links[route[0]].latency, 2);
        let base = compute_routes(&m, RouteMetric::Latency).unwrap();
        let path = base.route(&m, 0, 15);
        assert_eq!(path.iter().map(|&l| m.links[l].latency).sum::<u32>(), 15);
    }

    #[test]
    fn capacity_is_one_flit_per_cycle() {
        assert_eq!(flits_per_cycle(50.0, 64, 0.78125), 1.0);
    }

    #[test]
    fn single_flow_loads_its_route() {
        let t = build_mesh(4, &prof(TechKind::Electronic)).unwrap();
        let r = compute_routes(&t, RouteMetric::Latency).unwrap();
        let mut spec = TrafficSpec::zeros(16);
        spec.set(0, 3, 0.1);
        let load = accumulate_loads(&t, &r, &spec);
        let route = r.route(&t, 0, 3);
        assert_eq!(route.len(), 3);
        for (i, v) in load.flit_rate.iter().enumerate() {
            assert_eq!(*v, if route.contains(&i) { 0.1 } else { 0.0 });
        }
    }

    #[test]
    fn hop_metric_is_technology_blind() {
        let m = build_mesh(8, &prof(TechKind::Electronic)).unwrap();
        let a = add_express_links(&m, 3, &prof(TechKind::Electronic)).unwrap();
        let b = add_express_links(&m, 3, &prof(TechKind::Photonic)).unwrap();
        let ra = compute_routes(&a, RouteMetric::Hops).unwrap();
        let rb = compute_routes(&b, RouteMetric::Hops).unwrap();
        for s in 0..64 {
            for d in 0..64 {
                assert_eq!(ra.route(&a, s, d), rb.route(&b, s, d));
            }
        }
    }
}
