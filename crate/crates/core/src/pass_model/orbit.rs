//! Circular two-body orbit over a rotating spherical Earth.

use std::f64::consts::TAU;

use chrono::{DateTime, Utc};

use super::{link_budget, GroundStation, LinkGeometry, OpticalParams, PassProfile, PassSample, SatelliteConfig};
use crate::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Standard gravitational parameter, m³/s².
pub const EARTH_MU: f64 = 3.986_004_418e14;
/// Sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_146_706_979e-5;

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Earth rotation angle (radians, in `[0, 2π)`) at `epoch`, treating UTC as UT1.
pub fn earth_rotation_angle(epoch: &DateTime<Utc>) -> f64 {
    let unix = epoch.timestamp() as f64 + f64::from(epoch.timestamp_subsec_nanos()) * 1e-9;
    let days_since_j2000 = unix / 86_400.0 + 2_440_587.5 - 2_451_545.0;
    let turns = 0.779_057_273_264_0 + 1.002_737_811_911_354_5 * days_since_j2000;
    turns.rem_euclid(1.0) * TAU
}

struct Kinematics {
    position: Vec3,
    velocity: Vec3,
}

fn satellite_state(sat: &SatelliteConfig, t: f64) -> Kinematics {
    let r = EARTH_RADIUS_M + sat.orbit_altitude;
    let mean_motion = (EARTH_MU / (r * r * r)).sqrt();
    let u = sat.phase_at_epoch.to_radians() + mean_motion * t;
    let (sin_o, cos_o) = sat.raan.to_radians().sin_cos();
    let (sin_i, cos_i) = sat.orbit_inclination.to_radians().sin_cos();
    // In-plane basis: p toward the ascending node, q 90° ahead in the orbit plane.
    let p = [cos_o, sin_o, 0.0];
    let q = [-sin_o * cos_i, cos_o * cos_i, sin_i];
    let (sin_u, cos_u) = u.sin_cos();
    let v = r * mean_motion;
    Kinematics {
        position: [
            r * (cos_u * p[0] + sin_u * q[0]),
            r * (cos_u * p[1] + sin_u * q[1]),
            r * (cos_u * p[2] + sin_u * q[2]),
        ],
        velocity: [
            v * (-sin_u * p[0] + cos_u * q[0]),
            v * (-sin_u * p[1] + cos_u * q[1]),
            v * (-sin_u * p[2] + cos_u * q[2]),
        ],
    }
}

fn station_state(station: &GroundStation, rotation_angle: f64) -> Kinematics {
    let r = EARTH_RADIUS_M + station.altitude;
    let (sin_lat, cos_lat) = station.latitude.to_radians().sin_cos();
    let (sin_a, cos_a) = (rotation_angle + station.longitude.to_radians()).sin_cos();
    let position = [r * cos_lat * cos_a, r * cos_lat * sin_a, r * sin_lat];
    let velocity = [
        -EARTH_ROTATION_RATE * position[1],
        EARTH_ROTATION_RATE * position[0],
        0.0,
    ];
    Kinematics { position, velocity }
}

/// Orbit orientation `(raan, phase_at_epoch)` in degrees that puts the
/// sub-satellite point over (`latitude`, `longitude`) at `t` seconds after
/// `epoch`, on the ascending (northbound) or descending branch.
///
/// `|latitude|` must not exceed the orbit's maximum reachable latitude.
pub fn aim_orbit(
    altitude: f64,
    inclination: f64,
    epoch: &DateTime<Utc>,
    t: f64,
    latitude: f64,
    longitude: f64,
    ascending: bool,
) -> Result<(f64, f64)> {
    let inc = inclination.to_radians();
    let s = latitude.to_radians().sin() / inc.sin();
    if !(altitude > 0.0) || !(-1.0..=1.0).contains(&s) {
        return Err(Error::Config(format!(
            "latitude {latitude} unreachable with inclination {inclination}"
        )));
    }
    let mut u = s.asin();
    if !ascending {
        u = std::f64::consts::PI - u;
    }
    let r = EARTH_RADIUS_M + altitude;
    let mean_motion = (EARTH_MU / (r * r * r)).sqrt();
    let right_ascension = earth_rotation_angle(epoch) + EARTH_ROTATION_RATE * t + longitude.to_radians();
    let raan = right_ascension - (inc.cos() * u.sin()).atan2(u.cos());
    Ok((
        raan.to_degrees().rem_euclid(360.0),
        (u - mean_motion * t).to_degrees().rem_euclid(360.0),
    ))
}

/// Link geometry at `t` seconds after `epoch`: slant range, elevation and
/// range rate (positive when receding).
pub(crate) fn geometry_at(
    sat: &SatelliteConfig,
    station: &GroundStation,
    epoch_angle: f64,
    t: f64,
) -> (f64, f64, f64) {
    let s = satellite_state(sat, t);
    let g = station_state(station, epoch_angle + EARTH_ROTATION_RATE * t);
    let range = sub(s.position, g.position);
    let distance = norm(range);
    let up = {
        let n = norm(g.position);
        [g.position[0] / n, g.position[1] / n, g.position[2] / n]
    };
    let elevation = (dot(range, up) / distance).clamp(-1.0, 1.0).asin().to_degrees();
    let radial_velocity = dot(range, sub(s.velocity, g.velocity)) / distance;
    (distance, elevation, radial_velocity)
}

/// Samples the pass of `sat` over `station` every `step` seconds on
/// `[0, duration]`.
///
/// A satellite that never clears the station's minimum elevation yields a
/// valid, entirely invisible profile.
pub fn propagate_pass(
    sat: &SatelliteConfig,
    station: &GroundStation,
    optics: &OpticalParams,
    epoch: DateTime<Utc>,
    duration: f64,
    step: f64,
) -> Result<PassProfile> {
    sat.validate()?;
    station.validate()?;
    optics.validate()?;
    if !(duration > 0.0 && step > 0.0) {
        return Err(Error::Config(format!(
            "duration ({duration}) and step ({step}) must be > 0"
        )));
    }
    if duration / step < 2.0 {
        return Err(Error::Config(format!(
            "duration/step = {} is below 2",
            duration / step
        )));
    }
    let epoch_angle = earth_rotation_angle(&epoch);
    let count = (duration / step + 1e-9).floor() as usize + 1;
    let samples = (0..count)
        .map(|i| {
            let t = i as f64 * step;
            let (distance, elevation, radial_velocity) = geometry_at(sat, station, epoch_angle, t);
            let visible = elevation >= station.min_elevation;
            let eta = link_budget(
                &LinkGeometry {
                    distance,
                    elevation,
                    visible,
                },
                sat,
                station,
                optics,
            )?;
            Ok(PassSample {
                t,
                distance,
                elevation,
                radial_velocity,
                eta,
                visible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PassProfile::new(station.name.clone(), epoch, step, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch() -> DateTime<Utc> {
        "2023-01-02T10:00:00Z".parse().unwrap()
    }

    /// A satellite whose ground track crosses the station at `t_cross`.
    fn overhead(station: &GroundStation, t_cross: f64) -> SatelliteConfig {
        // Polar orbit in the plane of the station's meridian at t_cross.
        let angle = earth_rotation_angle(&epoch())
            + EARTH_ROTATION_RATE * t_cross
            + station.longitude.to_radians();
        let r = EARTH_RADIUS_M + 5e5;
        let n = (EARTH_MU / (r * r * r)).sqrt();
        SatelliteConfig {
            orbit_altitude: 5e5,
            orbit_inclination: 90.0,
            raan: angle.to_degrees(),
            phase_at_epoch: station.latitude - (n * t_cross).to_degrees(),
            tx_telescope_diameter: 0.1,
            memory_slots: 10,
        }
    }

    #[test]
    fn zenith_range_equals_altitude() {
        let station = GroundStation::new("gs", 10.0, 20.0);
        let sat = overhead(&station, 200.0);
        let (d, el, _) = geometry_at(&sat, &station, earth_rotation_angle(&epoch()), 200.0);
        assert!((d - 5e5).abs() < 1e-3, "{d}");
        assert!((el - 90.0).abs() < 1e-6, "{el}");
    }

    #[test]
    fn range_rate_changes_sign_at_culmination() {
        let station = GroundStation::new("gs", 10.0, 20.0);
        let sat = overhead(&station, 200.0);
        let p = propagate_pass(&sat, &station, &OpticalParams::default(), epoch(), 400.0, 1.0).unwrap();
        let s = p.samples();
        let culm = (0..s.len())
            .max_by(|&a, &b| s[a].elevation.total_cmp(&s[b].elevation))
            .unwrap();
        assert!((culm as f64 - 200.0).abs() <= 1.0);
        let sign_change = (1..s.len())
            .find(|&i| s[i - 1].radial_velocity < 0.0 && s[i].radial_velocity >= 0.0)
            .unwrap();
        assert!((sign_change as isize - culm as isize).abs() <= 1);
    }

    #[test]
    fn gating_below_min_elevation() {
        let station = GroundStation::new("gs", 10.0, 20.0);
        let sat = overhead(&station, 200.0);
        let p = propagate_pass(&sat, &station, &OpticalParams::default(), epoch(), 400.0, 1.0).unwrap();
        assert!(p.samples().iter().any(|s| !s.visible));
        for s in p.samples() {
            assert_eq!(s.visible, s.elevation >= 20.0);
            assert_eq!(s.eta == 0.0, !s.visible);
        }
    }

    #[test]
    fn opposite_hemisphere_is_invisible_not_an_error() {
        let station = GroundStation::new("gs", 10.0, 20.0);
        let sat = overhead(&station, 200.0);
        let far = GroundStation::new("far", -10.0, -160.0);
        let p = propagate_pass(&sat, &far, &OpticalParams::default(), epoch(), 400.0, 1.0).unwrap();
        assert!(!p.any_visible());
    }

    #[test]
    fn rejects_bad_inputs() {
        let station = GroundStation::new("gs", 10.0, 20.0);
        let mut sat = overhead(&station, 200.0);
        let o = OpticalParams::default();
        assert!(propagate_pass(&sat, &station, &o, epoch(), 0.0, 1.0).is_err());
        assert!(propagate_pass(&sat, &station, &o, epoch(), 10.0, 0.0).is_err());
        assert!(propagate_pass(&sat, &station, &o, epoch(), 1.0, 1.0).is_err());
        sat.orbit_altitude = 0.0;
        assert!(matches!(
            propagate_pass(&sat, &station, &o, epoch(), 10.0, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn aimed_orbit_passes_over_target() {
        for ascending in [true, false] {
            let station = GroundStation::new("gs", 45.0, 5.0);
            let (raan, phase) = aim_orbit(5e5, 97.4, &epoch(), 120.0, 45.0, 5.0, ascending).unwrap();
            let sat = SatelliteConfig {
                orbit_altitude: 5e5,
                orbit_inclination: 97.4,
                raan,
                phase_at_epoch: phase,
                tx_telescope_diameter: 0.1,
                memory_slots: 10,
            };
            let (d, el, _) = geometry_at(&sat, &station, earth_rotation_angle(&epoch()), 120.0);
            assert!((d - 5e5).abs() < 1e-3 && el > 89.99, "{d} {el}");
        }
        assert!(aim_orbit(5e5, 45.0, &epoch(), 0.0, 60.0, 0.0, true).is_err());
    }

    #[test]
    fn rotation_angle_at_j2000() {
        let j2000: DateTime<Utc> = "2000-01-01T12:00:00Z".parse().unwrap();
        let era = earth_rotation_angle(&j2000);
        assert!((era - 0.779_057_273_264 * TAU).abs() < 1e-9);
    }
}
