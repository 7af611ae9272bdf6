//! System-level evaluation: utilization slope R, cost aggregation, system CLEAR and
//! the design-space exploration over base/express technologies and hop spans.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::CostCalibration;
use crate::error::{Error, Result};
use crate::routing::{accumulate_loads_at, compute_routes, LinkLoadMap, RouteMetric, RouteTable};
use crate::techlib::{link_cost, LinkMode, ProfileSet, TechKind};
use crate::topology::{add_express_links, aggregate_capability, build_mesh, Topology};
use crate::traffic::{generate_synthetic, TrafficModelConfig, TrafficSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct UtilizationCurve {
    /// (max injection rate, mean link utilization)
    pub samples: Vec<(f64, f64)>,
}

pub fn default_r_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 100.0).collect()
}

/// Least-squares slope of y against x.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean link utilization against max injection rate, and its least-squares slope R.
pub fn utilization_slope(topo: &Topology, routes: &RouteTable, config: &TrafficModelConfig, r_grid: &[f64]) -> Result<(UtilizationCurve, f64)> {
    if r_grid.len() < 2 {
        return Err(Error::invalid("injection grid", "needs at least two rates"));
    }
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("injection grid", "rates must be strictly increasing"));
    }
    let mut samples = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let spec = generate_synthetic(topo, &config.with_rate(r))?;
        let load = accumulate_loads_at(topo, routes, &spec, 64, crate::routing::CLOCK_GHZ);
        samples.push((r, load.mean_utilization()));
    }
    let slope = ls_slope(&samples);
    Ok((UtilizationCurve { samples }, slope))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatencyWeighting {
    /// Pairs weighted by flit rate.
    #[default]
    Traffic,
    /// Every ordered pair weighted equally.
    Uniform,
}

impl FromStr for LatencyWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traffic" => Ok(Self::Traffic),
            "uniform" => Ok(Self::Uniform),
            _ => Err(Error::invalid("latency weighting", format!("unknown weighting `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostAggregate {
    pub static_power_w: f64,
    pub dynamic_power_w: f64,
    pub power_w: f64,
    pub area_mm2: f64,
    /// Mean route latency, clock cycles.
    pub latency_clk: f64,
}

/// Router traversal rate (flits/cycle) per node: locally injected plus all arriving flits.
pub fn router_traversal_rates(topo: &Topology, traffic: &TrafficSpec, load: &LinkLoadMap) -> Vec<f64> {
    let mut rt: Vec<f64> = (0..topo.num_nodes()).map(|s| traffic.source_total(s)).collect();
    for l in &topo.links {
        rt[l.dst] += load.flit_rate[l.id];
    }
    rt
}

pub fn mean_latency(routes: &RouteTable, traffic: &TrafficSpec, weighting: LatencyWeighting) -> f64 {
    let n = routes.num_nodes();
    let (mut acc, mut w) = (0.0, 0.0);
    match weighting {
        LatencyWeighting::Traffic if traffic.total() > 0.0 => {
            for (s, d, r) in traffic.flows() {
                acc += r * routes.route_latency(s, d) as f64;
                w += r;
            }
        }
        _ => {
            for s in 0..n {
                for d in 0..n {
                    if s != d {
                        acc += routes.route_latency(s, d) as f64;
                        w += 1.0;
                    }
                }
            }
        }
    }
    acc / w
}

/// Power, area and mean latency of a loaded network.
pub fn aggregate_costs(
    topo: &Topology,
    routes: &RouteTable,
    traffic: &TrafficSpec,
    load: &LinkLoadMap,
    calib: &CostCalibration,
    weighting: LatencyWeighting,
) -> Result<CostAggregate> {
    let f = calib.clock_hz();
    let mut stat = 0.0;
    let mut dynamic = 0.0;
    let mut area = 0.0;
    let rt = router_traversal_rates(topo, traffic, load);
    for (node, &ports) in topo.router_ports.iter().enumerate() {
        let r = calib.router(ports)?;
        stat += r.static_w;
        area += r.area_mm2;
        dynamic += rt[node] * f * r.dyn_j_per_flit;
    }
    for l in &topo.links {
        let c = calib.link(l.tech)?;
        stat += c.static_w(l.length_mm);
        area += c.area_mm2(l.length_mm);
        dynamic += load.flit_rate[l.id] * f * c.dyn_j_per_flit(l.length_mm);
    }
    Ok(CostAggregate {
        static_power_w: stat,
        dynamic_power_w: dynamic,
        power_w: stat + dynamic,
        area_mm2: area,
        latency_clk: mean_latency(routes, traffic, weighting),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClearReport {
    pub capability_gbps: f64,
    pub latency_clk: f64,
    pub power_w: f64,
    pub area_mm2: f64,
    pub r: f64,
    pub clear: f64,
}

/// System CLEAR = C / (L · P · A · R).
pub fn clear_system(capability: f64, latency: f64, power: f64, area: f64, r: f64) -> Result<ClearReport> {
    for (name, v) in [("capability", capability), ("latency", latency), ("power", power), ("area", area), ("R", r)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid("CLEAR factor", format!("{name} = {v} must be positive")));
        }
    }
    Ok(ClearReport {
        capability_gbps: capability,
        latency_clk: latency,
        power_w: power,
        area_mm2: area,
        r,
        clear: capability / (latency * power * area * r),
    })
}

/// One network variant: a base mesh and optional express links.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variant {
    pub base: TechKind,
    pub express: Option<(TechKind, usize)>,
}

impl Variant {
    pub fn plain(base: TechKind) -> Self {
        Self { base, express: None }
    }

    pub fn express(base: TechKind, tech: TechKind, hops: usize) -> Self {
        Self {
            base,
            express: Some((tech, hops)),
        }
    }

    pub fn hops(&self) -> usize {
        self.express.map_or(0, |e| e.1)
    }

    pub fn build(&self, k: usize, profiles: &ProfileSet) -> Result<Topology> {
        let mesh = build_mesh(k, profiles.get(self.base)?)?;
        match self.express {
            None => Ok(mesh),
            Some((t, h)) => add_express_links(&mesh, h, profiles.get(t)?),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.express {
            None => write!(f, "{}", self.base),
            Some((t, h)) => write!(f, "{}+{}{}", self.base, t, h),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploreConfig {
    pub k: usize,
    pub hops: Vec<usize>,
    pub base_techs: Vec<TechKind>,
    pub express_techs: Vec<TechKind>,
    pub include_plain: bool,
    /// `max_injection_rate` is the operating point for latency and power.
    pub traffic: TrafficModelConfig,
    pub r_grid: Vec<f64>,
    pub weighting: LatencyWeighting,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            k: 16,
            hops: vec![3, 5, 15],
            base_techs: vec![TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI],
            express_techs: vec![TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI],
            include_plain: true,
            traffic: TrafficModelConfig::default(),
            r_grid: default_r_grid(),
            weighting: LatencyWeighting::Traffic,
        }
    }
}

impl ExploreConfig {
    pub fn variants(&self) -> Vec<Variant> {
        let mut v = Vec::new();
        for &b in &self.base_techs {
            if self.include_plain {
                v.push(Variant::plain(b));
            }
            for &e in &self.express_techs {
                for &h in &self.hops {
                    v.push(Variant::express(b, e, h));
                }
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExploreRow {
    pub variant: Variant,
    pub status: RowStatus,
    pub costs: Option<CostAggregate>,
    pub report: Option<ClearReport>,
}

impl ExploreRow {
    pub fn clear(&self) -> f64 {
        self.report.map_or(0.0, |r| r.clear)
    }
}

/// Whether every link of the topology closes its optical loss budget.
pub fn is_feasible(topo: &Topology, profiles: &ProfileSet) -> Result<bool> {
    for l in &topo.links {
        match link_cost(profiles.get(l.tech)?, l.length_mm, LinkMode::NocLink) {
            Ok(_) => {}
            Err(Error::Infeasible { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Full evaluation of one variant. Capability and R use technology-blind hop-minimal
/// routes; latency and power use latency-minimal routes.
pub fn evaluate(variant: Variant, cfg: &ExploreConfig, profiles: &ProfileSet, calib: &CostCalibration) -> Result<ExploreRow> {
    let topo = variant.build(cfg.k, profiles)?;
    if !is_feasible(&topo, profiles)? {
        return Ok(ExploreRow {
            variant,
            status: RowStatus::Infeasible,
            costs: None,
            report: None,
        });
    }
    let hop_routes = compute_routes(&topo, RouteMetric::Hops)?;
    let (_, r) = utilization_slope(&topo, &hop_routes, &cfg.traffic, &cfg.r_grid)?;
    let routes = compute_routes(&topo, RouteMetric::Latency)?;
    let traffic = generate_synthetic(&topo, &cfg.traffic)?;
    let load = accumulate_loads_at(&topo, &routes, &traffic, calib.flit_bits, calib.clock_ghz);
    let costs = aggregate_costs(&topo, &routes, &traffic, &load, calib, cfg.weighting)?;
    let report = clear_system(aggregate_capability(&topo), costs.latency_clk, costs.power_w, costs.area_mm2, r)?;
    Ok(ExploreRow {
        variant,
        status: RowStatus::Ok,
        costs: Some(costs),
        report: Some(report),
    })
}

/// Evaluates every configured variant; rows sorted by CLEAR, best first.
pub fn explore(profiles: &ProfileSet, calib: &CostCalibration, cfg: &ExploreConfig) -> Result<Vec<ExploreRow>> {
    if cfg.base_techs.is_empty() || (cfg.express_techs.is_empty() || cfg.hops.is_empty()) && !cfg.include_plain {
        return Err(Error::invalid("explore", "empty option lists"));
    }
    cfg.traffic.validate()?;
    let mut rows: Vec<ExploreRow> = cfg
        .variants()
        .into_par_iter()
        .map(|v| evaluate(v, cfg, profiles, calib))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.clear().total_cmp(&a.clear()).then(a.variant.cmp(&b.variant)));
    Ok(rows)
}

/// Looks up the row of a variant.
pub fn find_row(rows: &[ExploreRow], v: Variant) -> Option<&ExploreRow> {
    rows.iter().find(|r| r.variant == v)
}

#[derive(Serialize)]
struct ExploreCsvRow {
    base_tech: TechKind,
    express_tech: String,
    hops: usize,
    status: RowStatus,
    capability_gbps: f64,
    latency_clk: f64,
    static_power_w: f64,
    dynamic_power_w: f64,
    power_w: f64,
    area_mm2: f64,
    r: f64,
    clear: f64,
}

pub fn write_explore_csv<W: Write>(w: W, rows: &[ExploreRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows {
        let c = row.costs;
        let rep = row.report;
        wr.serialize(ExploreCsvRow {
            base_tech: row.variant.base,
            express_tech: row.variant.express.map_or("none".into(), |e| e.0.to_string()),
            hops: row.variant.hops(),
            status: row.status,
            capability_gbps: rep.map_or(0.0, |r| r.capability_gbps),
            latency_clk: rep.map_or(0.0, |r| r.latency_clk),
            static_power_w: c.map_or(0.0, |c| c.static_power_w),
            dynamic_power_w: c.map_or(0.0, |c| c.dynamic_power_w),
            power_w: c.map_or(0.0, |c| c.power_w),
            area_mm2: c.map_or(0.0, |c| c.area_mm2),
            r: rep.map_or(0.0, |r| r.r),
            clear: row.clear(),
        })?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
