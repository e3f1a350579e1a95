//! Downlink transmission: far-field diffraction between the two apertures,
//! plane-parallel atmospheric extinction, and a flat system efficiency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{GroundStation, OpticalParams, SatelliteConfig};
use crate::{Error, Result};

/// The geometric part of a pass sample needed by the link budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub distance: f64,
    pub elevation: f64,
    pub visible: bool,
}

/// Far-field aperture coupling `(π·D_tx·D_rx / (4·λ·L))²`, capped at 1.
pub fn geometric_gain(tx_diameter: f64, rx_diameter: f64, wavelength: f64, distance: f64) -> f64 {
    let amplitude = PI * tx_diameter * rx_diameter / (4.0 * wavelength * distance);
    (amplitude * amplitude).min(1.0)
}

/// Zenith transmission raised to the airmass `1/sin(elevation)`.
pub fn atmospheric_factor(zenith_transmission: f64, elevation_deg: f64) -> f64 {
    zenith_transmission.powf(1.0 / elevation_deg.to_radians().sin())
}

/// Total downlink transmission for one sample. Invisible samples transmit
/// nothing.
pub fn link_budget(
    geometry: &LinkGeometry,
    sat: &SatelliteConfig,
    station: &GroundStation,
    optics: &OpticalParams,
) -> Result<f64> {
    if !geometry.visible {
        return Ok(0.0);
    }
    if !(geometry.distance > 0.0) {
        return Err(Error::Domain(format!(
            "link distance {} must be > 0",
            geometry.distance
        )));
    }
    if !(geometry.elevation > 0.0) {
        return Err(Error::Domain(format!(
            "visible sample with non-positive elevation {}",
            geometry.elevation
        )));
    }
    let eta = geometric_gain(
        sat.tx_telescope_diameter,
        station.rx_telescope_diameter,
        optics.wavelength,
        geometry.distance,
    ) * atmospheric_factor(optics.zenith_atmospheric_transmission, geometry.elevation)
        * optics.system_efficiency;
    Ok(eta.clamp(0.0, 1.0))
}
