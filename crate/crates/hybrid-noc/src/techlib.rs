//! Link technology profiles, per-link cost vectors and the link-level CLEAR metric.
//!
//! Units: capacity in Gb/s, latency in ps (bare links) or clock cycles (NoC links),
//! energy in fJ/bit, area in μm².

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in mm/ps.
pub const C_MM_PER_PS: f64 = 0.299_792_458;
/// Bits per flit.
pub const FLIT_BITS: u32 = 64;

const BUILTIN_PROFILES: &str = include_str!("../data/profiles.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TechKind {
    Electronic,
    Photonic,
    Plasmonic,
    #[serde(rename = "hyppi")]
    HyPPI,
}

impl TechKind {
    pub const ALL: [TechKind; 4] = [
        TechKind::Electronic,
        TechKind::Photonic,
        TechKind::Plasmonic,
        TechKind::HyPPI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TechKind::Electronic => "electronic",
            TechKind::Photonic => "photonic",
            TechKind::Plasmonic => "plasmonic",
            TechKind::HyPPI => "hyppi",
        }
    }

    pub fn is_optical(self) -> bool {
        self != TechKind::Electronic
    }

    /// NoC link latency in clock cycles: one for wires, two for optical links
    /// (the extra cycle is the O-E conversion at the receiver).
    pub fn noc_latency_clk(self) -> u32 {
        if self.is_optical() {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for TechKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TechKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "electronic" | "e" => Ok(TechKind::Electronic),
            "photonic" | "p" => Ok(TechKind::Photonic),
            "plasmonic" | "pl" => Ok(TechKind::Plasmonic),
            "hyppi" | "h" => Ok(TechKind::HyPPI),
            other => Err(Error::invalid("technology", format!("unknown technology `{other}`"))),
        }
    }
}

/// Repeated-wire parameters for electronic links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireModel {
    /// Wire pitch (width plus spacing), nm.
    pub pitch_nm: f64,
    /// Repeater spacing, mm.
    pub segment_mm: f64,
    pub segment_delay_ps: f64,
    pub segment_energy_fj: f64,
    pub repeater_area_um2: f64,
    /// Parallel wires in a NoC link.
    pub bus_width: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechnologyProfile {
    pub kind: TechKind,
    pub laser_efficiency: f64,
    pub laser_area_um2: f64,
    pub modulator_speed_device_gbps: f64,
    pub modulator_speed_system_gbps: f64,
    pub modulator_energy_fj: f64,
    pub modulator_insertion_loss_db: f64,
    pub modulator_extinction_ratio_db: f64,
    pub modulator_area_um2: f64,
    pub detector_energy_fj: f64,
    pub detector_responsivity_a_per_w: f64,
    pub detector_area_um2: f64,
    pub waveguide_prop_loss_db_per_cm: f64,
    pub coupling_loss_db: f64,
    pub waveguide_pitch_um: f64,
    pub waveguide_width_um: f64,
    pub receiver_sensitivity_dbm: f64,
    pub max_laser_power_mw: f64,
    pub wavelengths_per_link: u32,
    pub group_index: f64,
    pub transceiver_delay_ps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wire: Option<WireModel>,
}

impl TechnologyProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("technology profile", format!("{}: {reason}", self.kind)));
        if !(self.laser_efficiency > 0.0 && self.laser_efficiency <= 1.0) {
            return bad(format!("laser_efficiency {} outside (0,1]", self.laser_efficiency));
        }
        if self.modulator_speed_system_gbps > self.modulator_speed_device_gbps {
            return bad("system speed exceeds device speed".into());
        }
        if !(self.modulator_speed_system_gbps > 0.0) {
            return bad("system speed must be positive".into());
        }
        let losses = [
            self.modulator_insertion_loss_db,
            self.coupling_loss_db,
            self.waveguide_prop_loss_db_per_cm,
        ];
        if losses.iter().any(|l| *l < 0.0 || !l.is_finite()) {
            return bad("loss values must be finite and non-negative".into());
        }
        if self.wavelengths_per_link == 0 {
            return bad("wavelengths_per_link must be at least 1".into());
        }
        if self.kind.is_optical() {
            let areas = [
                self.laser_area_um2,
                self.modulator_area_um2,
                self.detector_area_um2,
                self.waveguide_pitch_um,
            ];
            if areas.iter().any(|a| !(*a > 0.0)) {
                return bad("optical device areas and pitch must be positive".into());
            }
            if !(self.waveguide_prop_loss_db_per_cm > 0.0) {
                return bad("optical profiles need positive propagation loss".into());
            }
            if !(self.max_laser_power_mw > 0.0) || !(self.group_index > 0.0) {
                return bad("laser cap and group index must be positive".into());
            }
        } else {
            if losses.iter().any(|l| *l != 0.0) {
                return bad("electronic profiles carry no optical loss".into());
            }
            let Some(w) = &self.wire else {
                return bad("electronic profile needs a [wire] table".into());
            };
            if !(w.pitch_nm > 0.0 && w.segment_mm > 0.0 && w.bus_width > 0) {
                return bad("wire pitch, segment and bus width must be positive".into());
            }
            if w.segment_delay_ps < 0.0 || w.segment_energy_fj < 0.0 || w.repeater_area_um2 < 0.0 {
                return bad("wire constants must be non-negative".into());
            }
        }
        Ok(())
    }

    /// Total optical loss of a point-to-point link of `length_mm`.
    pub fn link_loss_db(&self, length_mm: f64) -> f64 {
        self.modulator_insertion_loss_db + self.coupling_loss_db + self.waveguide_prop_loss_db_per_cm * length_mm / 10.0
    }

    /// Wall-plug laser power (mW, one wavelength) needed to close a loss budget.
    pub fn laser_power_mw(&self, loss_db: f64) -> f64 {
        10f64.powf((self.receiver_sensitivity_dbm + loss_db) / 10.0) / self.laser_efficiency
    }
}

/// A named set of technology profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    #[serde(rename = "profile")]
    pub profiles: Vec<TechnologyProfile>,
}

impl ProfileSet {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_PROFILES).expect("bundled profiles are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let set: ProfileSet = toml::from_str(text).map_err(|e| Error::Config(format!("profiles: {e}")))?;
        for p in &set.profiles {
            p.validate()?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, kind: TechKind) -> Result<&TechnologyProfile> {
        self.profiles
            .iter()
            .find(|p| p.kind == kind)
            .ok_or_else(|| Error::Config(format!("no profile for technology {kind}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkMode {
    BareLink,
    NocLink,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkCostVector {
    pub capacity_gbps: f64,
    /// ps in [`LinkMode::BareLink`], clock cycles in [`LinkMode::NocLink`].
    pub latency: f64,
    pub energy_fj_per_bit: f64,
    pub area_um2: f64,
    pub static_power_w: f64,
    pub dynamic_energy_per_flit_j: f64,
}

/// Cost vector without the laser-cap check, plus the wall-plug laser power in mW.
fn raw_link_cost(profile: &TechnologyProfile, length_mm: f64, mode: LinkMode) -> Result<(LinkCostVector, f64)> {
    if !(length_mm > 0.0) || !length_mm.is_finite() {
        return Err(Error::invalid("link length", format!("{length_mm} mm must be positive")));
    }
    let p = profile;
    let length_um = length_mm * 1000.0;
    if let Some(w) = p.wire.as_ref().filter(|_| !p.kind.is_optical()) {
        let segments = length_mm / w.segment_mm;
        let lanes = match mode {
            LinkMode::BareLink => 1.0,
            LinkMode::NocLink => w.bus_width as f64,
        };
        let (capacity, latency) = match mode {
            LinkMode::BareLink => (
                p.modulator_speed_device_gbps,
                p.transceiver_delay_ps + segments * w.segment_delay_ps,
            ),
            LinkMode::NocLink => (p.modulator_speed_system_gbps * lanes, p.kind.noc_latency_clk() as f64),
        };
        let energy = p.modulator_energy_fj + p.detector_energy_fj + segments * w.segment_energy_fj;
        let per_lane = p.modulator_area_um2 + p.detector_area_um2 + w.pitch_nm / 1000.0 * length_um + segments * w.repeater_area_um2;
        let cost = LinkCostVector {
            capacity_gbps: capacity,
            latency,
            energy_fj_per_bit: energy,
            area_um2: per_lane * lanes,
            static_power_w: 0.0,
            dynamic_energy_per_flit_j: energy * FLIT_BITS as f64 * 1e-15,
        };
        return Ok((cost, 0.0));
    }
    if !p.kind.is_optical() {
        return Err(Error::invalid("technology profile", "electronic profile without wire model"));
    }
    let channels = match mode {
        LinkMode::BareLink => 1.0,
        LinkMode::NocLink => p.wavelengths_per_link as f64,
    };
    let (capacity, latency) = match mode {
        LinkMode::BareLink => (
            p.modulator_speed_device_gbps,
            p.transceiver_delay_ps + length_mm * p.group_index / C_MM_PER_PS,
        ),
        LinkMode::NocLink => (p.modulator_speed_system_gbps * channels, p.kind.noc_latency_clk() as f64),
    };
    let laser_mw = p.laser_power_mw(p.link_loss_db(length_mm)) * channels;
    // mW / (Gb/s) = pJ/bit
    let laser_fj = laser_mw / capacity * 1000.0;
    let energy = p.modulator_energy_fj + p.detector_energy_fj + laser_fj;
    let devices = (p.laser_area_um2 + p.modulator_area_um2 + p.detector_area_um2) * channels;
    let cost = LinkCostVector {
        capacity_gbps: capacity,
        latency,
        energy_fj_per_bit: energy,
        area_um2: devices + p.waveguide_pitch_um * length_um,
        static_power_w: laser_mw * 1e-3,
        dynamic_energy_per_flit_j: (p.modulator_energy_fj + p.detector_energy_fj) * FLIT_BITS as f64 * 1e-15,
    };
    Ok((cost, laser_mw))
}

/// Cost vector of a single link of `length_mm`.
///
/// Optical links whose loss budget needs more than the profile's laser cap are rejected.
pub fn link_cost(profile: &TechnologyProfile, length_mm: f64, mode: LinkMode) -> Result<LinkCostVector> {
    let (cost, laser_mw) = raw_link_cost(profile, length_mm, mode)?;
    if laser_mw > profile.max_laser_power_mw {
        return Err(Error::Infeasible {
            length_mm,
            laser_mw,
            cap_mw: profile.max_laser_power_mw,
        });
    }
    Ok(cost)
}

/// Link CLEAR = C / (L · E · A).
pub fn clear_link(cost: &LinkCostVector) -> Result<f64> {
    let denom = [cost.latency, cost.energy_fj_per_bit, cost.area_um2];
    if denom.iter().any(|v| !(*v > 0.0)) || !(cost.capacity_gbps >= 0.0) {
        return Err(Error::invalid(
            "cost vector",
            format!("latency, energy and area must be positive (got {denom:?})"),
        ));
    }
    Ok(cost.capacity_gbps / (cost.latency * cost.energy_fj_per_bit * cost.area_um2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub technology: TechKind,
    pub length_mm: f64,
    pub capacity_gbps: f64,
    pub latency_ps: f64,
    pub energy_fj_per_bit: f64,
    pub area_um2: f64,
    pub clear: f64,
}

/// CLEAR over every (profile, length) pair, ordered by technology then length.
/// Infeasible links appear with `clear = 0`.
pub fn clear_sweep(profiles: &[TechnologyProfile], lengths_mm: &[f64]) -> Result<Vec<SweepRow>> {
    if profiles.is_empty() || lengths_mm.is_empty() {
        return Err(Error::invalid("sweep", "needs at least one profile and one length"));
    }
    let mut ordered: Vec<&TechnologyProfile> = profiles.iter().collect();
    ordered.sort_by_key(|p| p.kind);
    let mut lengths = lengths_mm.to_vec();
    lengths.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(ordered.len() * lengths.len());
    for p in ordered {
        for &len in &lengths {
            let (cost, laser_mw) = raw_link_cost(p, len, LinkMode::BareLink)?;
            let clear = if laser_mw > p.max_laser_power_mw { 0.0 } else { clear_link(&cost)? };
            rows.push(SweepRow {
                technology: p.kind,
                length_mm: len,
                capacity_gbps: cost.capacity_gbps,
                latency_ps: cost.latency,
                energy_fj_per_bit: cost.energy_fj_per_bit,
                area_um2: cost.area_um2,
                clear,
            });
        }
    }
    Ok(rows)
}

/// Technology with the highest CLEAR at each swept length.
pub fn winners(rows: &[SweepRow]) -> Vec<(f64, TechKind)> {
    let mut lengths: Vec<f64> = rows.iter().map(|r| r.length_mm).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    lengths
        .into_iter()
        .filter_map(|len| {
            rows.iter()
                .filter(|r| r.length_mm == len)
                .max_by(|a, b| a.clear.total_cmp(&b.clear))
                .map(|r| (len, r.technology))
        })
        .collect()
}

/// `n` log-spaced lengths from `start` to `end` inclusive.
pub fn log_lengths(start_mm: f64, end_mm: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![start_mm];
    }
    let (a, b) = (start_mm.ln(), end_mm.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
