//! Cost calibration: router and link static power, dynamic energy per flit and area.
//!
//! Link costs are power laws in length, `c0 + c1 · L^exp`; areas are affine in length.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optproj::{OpticalRouterProfile, ProjectionCalib};
use crate::techlib::TechKind;
use crate::topology::Link;

const BUILTIN_CALIBRATION: &str = include_str!("../data/calibration.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouterCalib {
    pub ports: u8,
    pub static_w: f64,
    pub dyn_j_per_flit: f64,
    pub area_mm2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCalib {
    pub tech: TechKind,
    pub static_w0: f64,
    pub static_w1: f64,
    pub static_exp: f64,
    pub dyn_j0: f64,
    pub dyn_j1: f64,
    pub dyn_exp: f64,
    pub area_mm2_0: f64,
    pub area_mm2_per_mm: f64,
}

impl LinkCalib {
    pub fn static_w(&self, length_mm: f64) -> f64 {
        self.static_w0 + self.static_w1 * length_mm.powf(self.static_exp)
    }

    pub fn dyn_j_per_flit(&self, length_mm: f64) -> f64 {
        self.dyn_j0 + self.dyn_j1 * length_mm.powf(self.dyn_exp)
    }

    pub fn area_mm2(&self, length_mm: f64) -> f64 {
        self.area_mm2_0 + self.area_mm2_per_mm * length_mm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostCalibration {
    pub clock_ghz: f64,
    pub flit_bits: u32,
    #[serde(rename = "router")]
    pub routers: Vec<RouterCalib>,
    #[serde(rename = "link")]
    pub links: Vec<LinkCalib>,
    pub projection: ProjectionCalib,
    #[serde(rename = "optical_router")]
    pub optical_routers: Vec<OpticalRouterProfile>,
}

impl CostCalibration {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_CALIBRATION).expect("bundled calibration is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cal: CostCalibration = toml::from_str(text).map_err(|e| Error::Config(format!("calibration: {e}")))?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clock_ghz > 0.0) || self.flit_bits == 0 {
            return Err(Error::invalid("calibration", "clock and flit size must be positive"));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        for r in &self.routers {
            if ![r.static_w, r.dyn_j_per_flit, r.area_mm2].into_iter().all(nonneg) {
                return Err(Error::invalid("calibration", format!("router {} has negative cost", r.ports)));
            }
        }
        for l in &self.links {
            let vals = [l.static_w0, l.static_w1, l.dyn_j0, l.dyn_j1, l.area_mm2_0, l.area_mm2_per_mm];
            if !vals.into_iter().all(nonneg) {
                return Err(Error::invalid("calibration", format!("link {} has negative cost", l.tech)));
            }
        }
        for r in &self.optical_routers {
            r.validate()?;
        }
        Ok(())
    }

    pub fn router(&self, ports: u8) -> Result<&RouterCalib> {
        self.routers
            .iter()
            .find(|r| r.ports == ports)
            .ok_or_else(|| Error::MissingCalibration(format!("router with {ports} ports")))
    }

    pub fn link(&self, tech: TechKind) -> Result<&LinkCalib> {
        self.links
            .iter()
            .find(|l| l.tech == tech)
            .ok_or_else(|| Error::MissingCalibration(format!("link technology {tech}")))
    }

    pub fn link_static_w(&self, link: &Link) -> Result<f64> {
        Ok(self.link(link.tech)?.static_w(link.length_mm))
    }

    pub fn link_dyn_j(&self, link: &Link) -> Result<f64> {
        Ok(self.link(link.tech)?.dyn_j_per_flit(link.length_mm))
    }

    pub fn link_area_mm2(&self, link: &Link) -> Result<f64> {
        Ok(self.link(link.tech)?.area_mm2(link.length_mm))
    }

    pub fn optical_router(&self, tech: TechKind) -> Result<&OpticalRouterProfile> {
        self.optical_routers
            .iter()
            .find(|r| r.tech == tech)
            .ok_or_else(|| Error::MissingCalibration(format!("optical router {tech}")))
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_ghz * 1e9
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("calibration serializes")
    }
}
