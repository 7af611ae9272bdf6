//! All-optical NoC projections: path loss through optical routers, laser-driven
//! energy per bit, total area, and a three-way comparison against an electronic mesh.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calib::CostCalibration;
use crate::error::{Error, Result};
use crate::routing::{compute_routes, RouteMetric, RouteTable};
use crate::techlib::{ProfileSet, TechKind, TechnologyProfile};
use crate::topology::{build_mesh, NodeId, Topology};
use crate::traffic::{generate_synthetic, TrafficModelConfig, TrafficSpec};

/// Router port numbering used by port loss tables.
pub const PORT_LOCAL: u8 = 0;
pub const PORT_EAST: u8 = 1;
pub const PORT_WEST: u8 = 2;
pub const PORT_NORTH: u8 = 3;
pub const PORT_SOUTH: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortLoss {
    pub input: u8,
    pub output: u8,
    pub loss_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalRouterProfile {
    pub tech: TechKind,
    pub control_energy_fj: f64,
    pub loss_min_db: f64,
    pub loss_max_db: f64,
    pub area_um2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub port_loss_table: Vec<PortLoss>,
}

impl OpticalRouterProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_min_db >= 0.0 && self.loss_min_db <= self.loss_max_db) {
            return Err(Error::invalid("optical router", format!("{}: need 0 <= loss_min <= loss_max", self.tech)));
        }
        if !(self.area_um2 > 0.0) || self.control_energy_fj < 0.0 {
            return Err(Error::invalid("optical router", format!("{}: bad area or control energy", self.tech)));
        }
        Ok(())
    }

    fn traversal_loss(&self, policy: LossPolicy, input: u8, output: u8) -> Result<f64> {
        match policy {
            LossPolicy::Min => Ok(self.loss_min_db),
            LossPolicy::Max => Ok(self.loss_max_db),
            LossPolicy::Mean => Ok(0.5 * (self.loss_min_db + self.loss_max_db)),
            LossPolicy::PortTable => {
                if self.port_loss_table.is_empty() {
                    return Err(Error::invalid("loss policy", format!("{} router has no port loss table", self.tech)));
                }
                self.port_loss_table
                    .iter()
                    .find(|e| e.input == input && e.output == output)
                    .map(|e| e.loss_db)
                    .ok_or_else(|| Error::invalid("loss policy", format!("no port table entry {input}->{output}")))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossPolicy {
    #[default]
    Min,
    Mean,
    Max,
    PortTable,
}

impl FromStr for LossPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Self::Min),
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            "port-table" => Ok(Self::PortTable),
            _ => Err(Error::invalid("loss policy", format!("unknown policy `{s}`"))),
        }
    }
}

impl fmt::Display for LossPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Mean => "mean",
            Self::Max => "max",
            Self::PortTable => "port-table",
        })
    }
}

/// How router control energy is charged per bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlCharge {
    /// Once per path, by the control network that sets the circuit up.
    #[default]
    PerPath,
    /// At every router on the path.
    PerRouter,
}

/// Projection constants that are not derived from device parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCalib {
    pub electronic_energy_fj_per_bit: f64,
    pub optical_latency_factor: f64,
    /// Length of each local injection or ejection waveguide.
    pub local_waveguide_mm: f64,
    pub local_waveguides_per_node: u32,
    #[serde(default)]
    pub control_charge: ControlCharge,
}

fn direction(topo: &Topology, from: NodeId, to: NodeId) -> u8 {
    let (a, b) = (topo.coord(from), topo.coord(to));
    if b.x > a.x {
        PORT_EAST
    } else if b.x < a.x {
        PORT_WEST
    } else if b.y > a.y {
        PORT_NORTH
    } else {
        PORT_SOUTH
    }
}

fn opposite(port: u8) -> u8 {
    match port {
        PORT_EAST => PORT_WEST,
        PORT_WEST => PORT_EAST,
        PORT_NORTH => PORT_SOUTH,
        PORT_SOUTH => PORT_NORTH,
        p => p,
    }
}

/// Modulator insertion loss plus coupling loss.
pub fn endpoint_loss_db(tech: &TechnologyProfile) -> f64 {
    tech.modulator_insertion_loss_db + tech.coupling_loss_db
}

/// Loss along a route: one router traversal per node on the path, waveguide
/// propagation over the summed link length, and endpoint losses.
pub fn path_loss(topo: &Topology, route: &[usize], router: &OpticalRouterProfile, tech: &TechnologyProfile, policy: LossPolicy) -> Result<f64> {
    let mut loss = endpoint_loss_db(tech);
    if route.is_empty() {
        return Ok(loss);
    }
    let mut length = 0.0;
    let mut input = PORT_LOCAL;
    for &li in route {
        let l = topo.links.get(li).ok_or_else(|| Error::invalid("route", format!("unknown link {li}")))?;
        let out = direction(topo, l.src, l.dst);
        loss += router.traversal_loss(policy, input, out)?;
        input = opposite(out);
        length += l.length_mm;
    }
    for w in route.windows(2) {
        if topo.links[w[0]].dst != topo.links[w[1]].src {
            return Err(Error::invalid("route", "links are not contiguous"));
        }
    }
    loss += router.traversal_loss(policy, input, PORT_LOCAL)?;
    loss += tech.waveguide_prop_loss_db_per_cm * length / 10.0;
    Ok(loss)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyProjection {
    /// Traffic-weighted mean over source/destination pairs.
    pub energy_fj_per_bit: f64,
    /// Pairs whose loss budget exceeds the laser cap (charged at the cap).
    pub infeasible_pairs: usize,
    /// Share of traffic on infeasible pairs.
    pub infeasible_fraction: f64,
}

/// Energy per bit of one path, and whether the laser cap was exceeded.
pub fn pair_energy_fj(loss_db: f64, routers: usize, router: &OpticalRouterProfile, tech: &TechnologyProfile, charge: ControlCharge) -> (f64, bool) {
    let lanes = tech.wavelengths_per_link as f64;
    let wanted = tech.laser_power_mw(loss_db) * lanes;
    let laser = wanted.min(tech.max_laser_power_mw);
    let capacity = tech.modulator_speed_system_gbps * lanes;
    let control = match charge {
        ControlCharge::PerPath => router.control_energy_fj,
        ControlCharge::PerRouter => router.control_energy_fj * routers as f64,
    };
    let e = laser / capacity * 1000.0 + tech.modulator_energy_fj + tech.detector_energy_fj + control;
    (e, wanted > tech.max_laser_power_mw)
}

pub fn project_energy(
    topo: &Topology,
    routes: &RouteTable,
    traffic: &TrafficSpec,
    router: &OpticalRouterProfile,
    tech: &TechnologyProfile,
    policy: LossPolicy,
    charge: ControlCharge,
) -> Result<EnergyProjection> {
    let mut acc = 0.0;
    let mut total = 0.0;
    let mut bad = 0;
    let mut bad_w = 0.0;
    for (s, d, w) in traffic.flows() {
        let route = routes.route(topo, s, d);
        let loss = path_loss(topo, &route, router, tech, policy)?;
        let (e, over) = pair_energy_fj(loss, route.len() + 1, router, tech, charge);
        acc += w * e;
        total += w;
        if over {
            bad += 1;
            bad_w += w;
        }
    }
    if total == 0.0 {
        return Err(Error::invalid("traffic", "no traffic to project"));
    }
    Ok(EnergyProjection {
        energy_fj_per_bit: acc / total,
        infeasible_pairs: bad,
        infeasible_fraction: bad_w / total,
    })
}

/// N routers, one waveguide per link, plus local injection/ejection waveguides; mm².
pub fn project_area(topo: &Topology, router: &OpticalRouterProfile, tech: &TechnologyProfile, calib: &ProjectionCalib) -> f64 {
    let n = topo.num_nodes() as f64;
    let pitch_mm = tech.waveguide_pitch_um * 1e-3;
    let links: f64 = topo.links.iter().map(|l| l.length_mm).sum();
    let local = n * calib.local_waveguides_per_node as f64 * calib.local_waveguide_mm;
    n * router.area_um2 * 1e-6 + (links + local) * pitch_mm
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpticalProjection {
    pub network: String,
    pub energy_fj_per_bit: f64,
    pub total_area_mm2: f64,
    pub latency_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadarRow {
    pub network: String,
    pub energy_fj_per_bit: f64,
    pub area_mm2: f64,
    pub latency_factor: f64,
    pub norm_latency: f64,
    pub norm_energy: f64,
    pub norm_area: f64,
    /// Axes on which this network is best (smallest), `;`-separated.
    pub wins: String,
}

/// Normalizes each axis by its largest value; smaller is better on every axis.
pub fn radar_compare(projections: &[OpticalProjection]) -> Vec<RadarRow> {
    let axis = |f: fn(&OpticalProjection) -> f64| -> (f64, f64) {
        let max = projections.iter().map(f).fold(f64::MIN, f64::max);
        let min = projections.iter().map(f).fold(f64::MAX, f64::min);
        (max, min)
    };
    let lat = axis(|p| p.latency_factor);
    let en = axis(|p| p.energy_fj_per_bit);
    let ar = axis(|p| p.total_area_mm2);
    projections
        .iter()
        .map(|p| {
            let mut wins = Vec::new();
            for (name, v, (_, min)) in [("latency", p.latency_factor, lat), ("energy", p.energy_fj_per_bit, en), ("area", p.total_area_mm2, ar)] {
                if v == min {
                    wins.push(name);
                }
            }
            RadarRow {
                network: p.network.clone(),
                energy_fj_per_bit: p.energy_fj_per_bit,
                area_mm2: p.total_area_mm2,
                latency_factor: p.latency_factor,
                norm_latency: p.latency_factor / lat.0,
                norm_energy: p.energy_fj_per_bit / en.0,
                norm_area: p.total_area_mm2 / ar.0,
                wins: wins.join(";"),
            }
        })
        .collect()
}

/// Electronic reference: calibrated energy per bit and the mesh's router and link area.
pub fn electronic_projection(k: usize, profiles: &ProfileSet, calib: &CostCalibration) -> Result<OpticalProjection> {
    let topo = build_mesh(k, profiles.get(TechKind::Electronic)?)?;
    let mut area = 0.0;
    for &ports in &topo.router_ports {
        area += calib.router(ports)?.area_mm2;
    }
    for l in &topo.links {
        area += calib.link_area_mm2(l)?;
    }
    Ok(OpticalProjection {
        network: TechKind::Electronic.to_string(),
        energy_fj_per_bit: calib.projection.electronic_energy_fj_per_bit,
        total_area_mm2: area,
        latency_factor: 1.0,
    })
}

/// All-optical k×k mesh of `kind` routers under synthetic traffic.
pub fn optical_projection(
    kind: TechKind,
    k: usize,
    profiles: &ProfileSet,
    calib: &CostCalibration,
    traffic: &TrafficModelConfig,
    policy: LossPolicy,
) -> Result<(OpticalProjection, EnergyProjection)> {
    if !kind.is_optical() {
        return Err(Error::invalid("router profile", format!("{kind} is not optical")));
    }
    let tech = profiles.get(kind)?;
    let router = calib.optical_router(kind)?;
    let topo = build_mesh(k, tech)?;
    let routes = compute_routes(&topo, RouteMetric::Latency)?;
    let spec = generate_synthetic(&topo, traffic)?;
    let energy = project_energy(&topo, &routes, &spec, router, tech, policy, calib.projection.control_charge)?;
    let proj = OpticalProjection {
        network: kind.to_string(),
        energy_fj_per_bit: energy.energy_fj_per_bit,
        total_area_mm2: project_area(&topo, router, tech, &calib.projection),
        latency_factor: calib.projection.optical_latency_factor,
    };
    Ok((proj, energy))
}
