//! Greenshields speed/density relation and the travel times it implies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Network, RoadSection, SectionId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Lowest speed used for travel times, so jammed sections stay passable.
    pub v_floor_kmh: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { v_floor_kmh: 1.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("section {0} does not exist")]
    UnknownSection(SectionId),
    #[error("density {density} veh/km for section {section} outside [0, {k_max}]")]
    DensityOutOfRange { section: SectionId, density: f64, k_max: f64 },
}

/// `v_max * (1 - k / k_max)`, never negative.
pub fn speed(section: &RoadSection) -> f64 {
    let v = section.v_max_kmh * (1.0 - section.density_vpk / section.k_max_vpk);
    v.max(0.0)
}

/// Hours needed to traverse the section at its current density.
pub fn travel_time(section: &RoadSection, fp: &FlowParams) -> f64 {
    section.length_km / speed(section).max(fp.v_floor_kmh)
}

/// Returns a copy of `net` with one section's density replaced.
pub fn set_density(net: &Network, section: SectionId, density: f64) -> Result<Network, FlowError> {
    let idx = net.section_index(section).ok_or(FlowError::UnknownSection(section))?;
    let k_max = net.sections()[idx].k_max_vpk;
    if !(0.0..=k_max).contains(&density) {
        return Err(FlowError::DensityOutOfRange { section, density, k_max });
    }
    let mut out = net.clone();
    out.section_mut(idx).density_vpk = density;
    Ok(out)
}
