//! Satellite pass geometry and downlink transmission time series.
//!
//! A [`PassProfile`] is the per-sample view of one ground station's link to
//! the satellite: slant range, elevation, range rate and total downlink
//! transmission. Profiles are either generated with [`propagate_pass`] (a
//! circular two-body orbit over a rotating spherical Earth) or read from CSV
//! with [`read_profile`], so that externally computed ephemerides and
//! attenuation curves can be used instead.

mod csv_io;
mod link_budget;
mod orbit;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{read_profile, read_profile_from, write_profile, write_profile_to, PROFILE_HEADER};
pub use link_budget::{atmospheric_factor, geometric_gain, link_budget, LinkGeometry};
pub use orbit::{aim_orbit, earth_rotation_angle, propagate_pass, EARTH_MU, EARTH_RADIUS_M, EARTH_ROTATION_RATE};

/// Allowed deviation of a sample time from the uniform grid, seconds.
pub const GRID_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub name: String,
    /// Geodetic latitude on a spherical Earth, degrees.
    pub latitude: f64,
    pub longitude: f64,
    /// Height above the reference sphere, meters.
    pub altitude: f64,
    pub rx_telescope_diameter: f64,
    /// Elevation below which the link is considered unavailable, degrees.
    pub min_elevation: f64,
}

impl GroundStation {
    pub const DEFAULT_MIN_ELEVATION: f64 = 20.0;

    pub fn new(name: impl Into<String>, latitude: f64, longitude: f64) -> Self {
        Self {
            name: name.into(),
            latitude,
            longitude,
            altitude: 0.0,
            rx_telescope_diameter: 1.0,
            min_elevation: Self::DEFAULT_MIN_ELEVATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!(
                "station name `{}` must be non-empty and contain no whitespace",
                self.name
            )));
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::Config(format!("latitude {} outside [-90, 90]", self.latitude)));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::Config(format!("longitude {} outside [-180, 180]", self.longitude)));
        }
        if !(self.altitude >= 0.0) {
            return Err(Error::Config(format!("station altitude {} must be >= 0", self.altitude)));
        }
        if !(self.rx_telescope_diameter > 0.0) {
            return Err(Error::Config("receive telescope diameter must be > 0".into()));
        }
        if !(self.min_elevation > 0.0 && self.min_elevation < 90.0) {
            return Err(Error::Config(format!(
                "min_elevation {} outside (0, 90)",
                self.min_elevation
            )));
        }
        Ok(())
    }
}

/// Circular-orbit satellite with an onboard quantum memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteConfig {
    /// Height of the circular orbit above the reference sphere, meters.
    pub orbit_altitude: f64,
    pub orbit_inclination: f64,
    /// Right ascension of the ascending node, degrees (inertial frame).
    pub raan: f64,
    /// Argument of latitude at the profile epoch, degrees.
    pub phase_at_epoch: f64,
    pub tx_telescope_diameter: f64,
    pub memory_slots: u32,
}

impl SatelliteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.orbit_altitude > 0.0) {
            return Err(Error::Config(format!(
                "orbit altitude {} must be > 0",
                self.orbit_altitude
            )));
        }
        if !(self.tx_telescope_diameter > 0.0) {
            return Err(Error::Config("transmit telescope diameter must be > 0".into()));
        }
        if self.memory_slots == 0 {
            return Err(Error::Config("satellite needs at least one memory slot".into()));
        }
        for (what, v) in [
            ("inclination", self.orbit_inclination),
            ("raan", self.raan),
            ("phase_at_epoch", self.phase_at_epoch),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{what} must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    pub wavelength: f64,
    /// Atmospheric transmission looking straight up.
    pub zenith_atmospheric_transmission: f64,
    /// Catch-all for detector efficiency and pointing losses.
    pub system_efficiency: f64,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            wavelength: 1550e-9,
            zenith_atmospheric_transmission: 1.0,
            system_efficiency: 1.0,
        }
    }
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) {
            return Err(Error::Config("wavelength must be > 0".into()));
        }
        for (what, v) in [
            ("zenith_atmospheric_transmission", self.zenith_atmospheric_transmission),
            ("system_efficiency", self.system_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{what} = {v} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassSample {
    /// Seconds since the profile epoch.
    pub t: f64,
    /// Slant range, meters.
    pub distance: f64,
    /// Degrees above the local horizon.
    pub elevation: f64,
    /// Range rate, m/s, positive when the satellite recedes.
    pub radial_velocity: f64,
    /// Total downlink transmission.
    pub eta: f64,
    pub visible: bool,
}

/// Uniformly sampled link parameters for one station during one pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassProfile {
    pub station: String,
    pub epoch: DateTime<Utc>,
    pub sample_step: f64,
    samples: Vec<PassSample>,
}

impl PassProfile {
    /// Builds a profile, checking every sample and grid invariant.
    pub fn new(
        station: impl Into<String>,
        epoch: DateTime<Utc>,
        sample_step: f64,
        samples: Vec<PassSample>,
    ) -> Result<Self> {
        let profile = Self {
            station: station.into(),
            epoch,
            sample_step,
            samples,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// A profile whose link parameters never change. The satellite is
    /// reported at zenith and always visible (unless `eta` is zero, in which
    /// case it is still flagged visible but transmits nothing).
    pub fn constant(
        station: impl Into<String>,
        epoch: DateTime<Utc>,
        duration: f64,
        step: f64,
        distance: f64,
        eta: f64,
        radial_velocity: f64,
    ) -> Result<Self> {
        if !(step > 0.0 && duration / step >= 1.0) {
            return Err(Error::Config("constant profile needs duration >= step > 0".into()));
        }
        let n = (duration / step + 1e-9).floor() as usize;
        let samples = (0..n)
            .map(|i| PassSample {
                t: i as f64 * step,
                distance,
                elevation: 90.0,
                radial_velocity,
                eta,
                visible: true,
            })
            .collect();
        Self::new(station, epoch, step, samples)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_step > 0.0) {
            return Err(Error::Config("sample step must be > 0".into()));
        }
        if self.samples.len() < 2 {
            return Err(Error::Config("a profile needs at least 2 samples".into()));
        }
        let t0 = self.samples[0].t;
        for (i, s) in self.samples.iter().enumerate() {
            check_sample(s).map_err(|msg| Error::Config(format!("sample {i}: {msg}")))?;
            if i > 0 {
                if s.t <= self.samples[i - 1].t {
                    return Err(Error::Config(format!("sample {i}: t is not strictly increasing")));
                }
                let expected = t0 + i as f64 * self.sample_step;
                if (s.t - expected).abs() > GRID_TOLERANCE_S {
                    return Err(Error::Config(format!(
                        "sample {i}: t = {} off the uniform grid (expected {expected})",
                        s.t
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn samples(&self) -> &[PassSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    /// End of the period covered by the profile: the last sample holds for
    /// one step.
    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t + self.sample_step
    }

    /// Zero-order hold: index of the last sample at or before `t`, or `None`
    /// outside `[start_time, end_time)`.
    pub fn sample_index_at(&self, t: f64) -> Option<usize> {
        if t < self.start_time() - GRID_TOLERANCE_S || t >= self.end_time() {
            return None;
        }
        let idx = ((t - self.start_time()) / self.sample_step + 1e-9).floor().max(0.0) as usize;
        Some(idx.min(self.samples.len() - 1))
    }

    pub fn sample_at(&self, t: f64) -> Option<&PassSample> {
        self.sample_index_at(t).map(|i| &self.samples[i])
    }

    pub fn any_visible(&self) -> bool {
        self.samples.iter().any(|s| s.visible)
    }

    /// Checks that `other` is sampled on the same time grid.
    pub fn check_aligned(&self, other: &PassProfile) -> Result<()> {
        if self.epoch != other.epoch {
            return Err(Error::Alignment(format!(
                "epochs differ ({} vs {})",
                self.epoch, other.epoch
            )));
        }
        if self.len() != other.len() || (self.sample_step - other.sample_step).abs() > GRID_TOLERANCE_S {
            return Err(Error::Alignment(format!(
                "sampling differs ({} samples every {} s vs {} samples every {} s)",
                self.len(),
                self.sample_step,
                other.len(),
                other.sample_step
            )));
        }
        if let Some((i, _)) = self
            .samples
            .iter()
            .zip(&other.samples)
            .enumerate()
            .find(|(_, (a, b))| (a.t - b.t).abs() > GRID_TOLERANCE_S)
        {
            return Err(Error::Alignment(format!("sample times differ at index {i}")));
        }
        Ok(())
    }
}

pub(crate) fn check_sample(s: &PassSample) -> std::result::Result<(), String> {
    if !s.t.is_finite() {
        return Err("t must be finite".into());
    }
    if !(s.distance > 0.0 && s.distance.is_finite()) {
        return Err(format!("distance {} must be > 0", s.distance));
    }
    if !(-90.0..=90.0).contains(&s.elevation) {
        return Err(format!("elevation {} outside [-90, 90]", s.elevation));
    }
    if !s.radial_velocity.is_finite() {
        return Err("radial velocity must be finite".into());
    }
    if !(0.0..=1.0).contains(&s.eta) {
        return Err(format!("eta {} outside [0, 1]", s.eta));
    }
    if !s.visible && s.eta != 0.0 {
        return Err("eta must be 0 when the satellite is not visible".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch() -> DateTime<Utc> {
        "2023-01-02T10:00:00Z".parse().unwrap()
    }

    fn sample(t: f64) -> PassSample {
        PassSample {
            t,
            distance: 5e5,
            elevation: 60.0,
            radial_velocity: 0.0,
            eta: 0.01,
            visible: true,
        }
    }

    #[test]
    fn station_validation() {
        let mut gs = GroundStation::new("nice", 43.7, 7.26);
        gs.validate().unwrap();
        gs.latitude = 91.0;
        assert!(gs.validate().is_err());
        let mut gs = GroundStation::new("nice", 43.7, 7.26);
        gs.min_elevation = 90.0;
        assert!(gs.validate().is_err());
        gs.min_elevation = 20.0;
        gs.rx_telescope_diameter = 0.0;
        assert!(gs.validate().is_err());
        assert!(GroundStation::new("two words", 0.0, 0.0).validate().is_err());
    }

    #[test]
    fn profile_rejects_bad_grids() {
        assert!(PassProfile::new("a", epoch(), 1.0, vec![sample(0.0)]).is_err());
        assert!(PassProfile::new("a", epoch(), 1.0, vec![sample(0.0), sample(0.0)]).is_err());
        assert!(PassProfile::new("a", epoch(), 1.0, vec![sample(0.0), sample(1.5)]).is_err());
        PassProfile::new("a", epoch(), 1.0, vec![sample(0.0), sample(1.0 + 5e-7)]).unwrap();
    }

    #[test]
    fn invisible_sample_must_be_dark() {
        let mut s = sample(1.0);
        s.visible = false;
        assert!(PassProfile::new("a", epoch(), 1.0, vec![sample(0.0), s]).is_err());
        s.eta = 0.0;
        PassProfile::new("a", epoch(), 1.0, vec![sample(0.0), s]).unwrap();
    }

    #[test]
    fn zero_order_hold_lookup() {
        let p = PassProfile::constant("a", epoch(), 5.0, 1.0, 5e5, 0.1, 0.0).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p.sample_index_at(0.0), Some(0));
        assert_eq!(p.sample_index_at(0.999), Some(0));
        assert_eq!(p.sample_index_at(1.0), Some(1));
        assert_eq!(p.sample_index_at(4.5), Some(4));
        assert_eq!(p.sample_index_at(5.0), None);
        assert_eq!(p.sample_index_at(-1.0), None);
    }

    #[test]
    fn alignment_check() {
        let a = PassProfile::constant("a", epoch(), 5.0, 1.0, 5e5, 0.1, 0.0).unwrap();
        let b = PassProfile::constant("b", epoch(), 5.0, 1.0, 6e5, 0.2, 0.0).unwrap();
        a.check_aligned(&b).unwrap();
        let c = PassProfile::constant("c", epoch(), 6.0, 1.0, 6e5, 0.2, 0.0).unwrap();
        assert!(matches!(a.check_aligned(&c), Err(Error::Alignment(_))));
    }
}
