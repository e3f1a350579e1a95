#![allow(dead_code)]

use chrono::{DateTime, Utc};
use orbilink::pass_model::{PassProfile, PassSample};
use orbilink::SPEED_OF_LIGHT;
use rand::Rng;

pub fn epoch() -> DateTime<Utc> {
    "2023-01-02T10:00:00Z".parse().unwrap()
}

/// Distance whose light round trip is `t_rt`.
pub fn distance_for(t_rt: f64) -> f64 {
    SPEED_OF_LIGHT * t_rt / 2.0
}

pub fn constant(duration: f64, t_rt: f64, eta: f64, v_r: f64) -> PassProfile {
    PassProfile::constant("const", epoch(), duration, 1.0, distance_for(t_rt), eta, v_r).unwrap()
}

/// Bell-shaped pass centred at `tc`: visible within two widths of the centre.
pub fn bell(name: &str, len: usize, tc: f64, width: f64, eta0: f64, d0: f64) -> PassProfile {
    let samples = (0..len)
        .map(|i| {
            let t = i as f64;
            let u = (t - tc) / width;
            let visible = u.abs() < 2.0;
            let s = (1.0 + u * u).sqrt();
            PassSample {
                t,
                distance: d0 * s,
                elevation: 90.0 / s,
                radial_velocity: 6500.0 * u / s,
                eta: if visible { eta0 * (-0.5 * u * u).exp() } else { 0.0 },
                visible,
            }
        })
        .collect();
    PassProfile::new(name, epoch(), 1.0, samples).unwrap()
}

pub fn random_bell(rng: &mut impl Rng, name: &str, len: usize) -> PassProfile {
    let tc = rng.gen_range(0.3..0.7) * len as f64;
    let width = rng.gen_range(0.08..0.25) * len as f64;
    let eta0 = rng.gen_range(1e-3..5e-2);
    let d0 = rng.gen_range(4e5..8e5);
    bell(name, len, tc, width, eta0, d0)
}
