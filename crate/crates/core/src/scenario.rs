//! Reference geometries.
//!
//! [`micius_like`] reproduces the phenomenology of a low-Earth-orbit pass
//! over Nice and Paris: a 500 km, 97.4° circular orbit whose ascending
//! ground track crosses 45° N, 5.762° E five minutes after the epoch. Nice
//! culminates first at about 80° elevation and Paris 90 s later at about
//! 72°. Each station sees the satellite above 20° for close to five minutes.

use chrono::{DateTime, Utc};

use crate::pass_model::{aim_orbit, propagate_pass, GroundStation, OpticalParams, PassProfile, SatelliteConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub epoch: DateTime<Utc>,
    pub satellite: SatelliteConfig,
    pub stations: Vec<GroundStation>,
    pub optics: OpticalParams,
    pub duration: f64,
    pub step: f64,
}

impl Scenario {
    pub fn profile(&self, station: usize) -> Result<PassProfile> {
        propagate_pass(
            &self.satellite,
            &self.stations[station],
            &self.optics,
            self.epoch,
            self.duration,
            self.step,
        )
    }

    pub fn profiles(&self) -> Result<Vec<PassProfile>> {
        (0..self.stations.len()).map(|i| self.profile(i)).collect()
    }
}

pub fn nice() -> GroundStation {
    GroundStation::new("nice", 43.7102, 7.2620)
}

pub fn paris() -> GroundStation {
    GroundStation::new("paris", 48.8566, 2.3522)
}

/// Nice (leg A) and Paris (leg B) under one Micius-like pass, sampled every
/// second for ten minutes.
pub fn micius_like(memory_slots: u32) -> Scenario {
    let epoch: DateTime<Utc> = "2023-01-02T10:00:00Z".parse().expect("valid timestamp");
    let (altitude, inclination) = (500e3, 97.4);
    let (raan, phase_at_epoch) =
        aim_orbit(altitude, inclination, &epoch, 300.0, 45.0, 5.762, true).expect("reachable anchor");
    Scenario {
        epoch,
        satellite: SatelliteConfig {
            orbit_altitude: altitude,
            orbit_inclination: inclination,
            raan,
            phase_at_epoch,
            tx_telescope_diameter: 0.1,
            memory_slots,
        },
        stations: vec![nice(), paris()],
        optics: OpticalParams {
            zenith_atmospheric_transmission: 0.9,
            ..OpticalParams::default()
        },
        duration: 600.0,
        step: 1.0,
    }
}
