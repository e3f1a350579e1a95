mod common;

use orbilink::pass_model::*;
use orbilink::scenario::{micius_like, nice};
use proptest::prelude::*;

fn finite_difference_gap(p: &PassProfile) -> (f64, f64) {
    let s = p.samples();
    let max_vr = s.iter().map(|x| x.radial_velocity.abs()).fold(0.0, f64::max);
    let worst = (1..s.len() - 1)
        .map(|i| {
            let fd = (s[i + 1].distance - s[i - 1].distance) / (s[i + 1].t - s[i - 1].t);
            (fd - s[i].radial_velocity).abs()
        })
        .fold(0.0, f64::max);
    (worst, max_vr)
}

#[test]
fn range_rate_matches_finite_difference() {
    for p in micius_like(100).profiles().unwrap() {
        let (worst, max_vr) = finite_difference_gap(&p);
        assert!(worst <= 0.01 * max_vr, "{}: gap {worst} vs max |v_r| {max_vr}", p.station);
    }
}

#[test]
fn max_radial_velocity_is_leo_scale() {
    let p = micius_like(100).profile(0).unwrap();
    let max_visible = p
        .samples()
        .iter()
        .filter(|s| s.visible)
        .map(|s| s.radial_velocity.abs())
        .fold(0.0, f64::max);
    println!("max |v_r| while visible over the first station: {max_visible:.1} m/s");
    assert!((5000.0..7600.0).contains(&max_visible));
}

#[test]
fn eta_vanishes_exactly_when_invisible() {
    for p in micius_like(10).profiles().unwrap() {
        assert!(p.any_visible());
        for s in p.samples() {
            assert_eq!(s.eta == 0.0, !s.visible, "t={}", s.t);
            assert!((0.0..=1.0).contains(&s.eta));
        }
    }
}

#[test]
fn propagation_is_deterministic() {
    let a = micius_like(50).profile(1).unwrap();
    let b = micius_like(50).profile(1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn opposite_hemisphere_never_rises() {
    let s = micius_like(10);
    let south = GroundStation::new("south", -43.7, -172.7);
    let p = propagate_pass(&s.satellite, &south, &s.optics, s.epoch, s.duration, s.step).unwrap();
    assert!(!p.any_visible());
    assert!(p.samples().iter().all(|x| x.eta == 0.0));
}

#[test]
fn bad_orbit_is_a_config_error() {
    let mut s = micius_like(10);
    s.satellite.orbit_altitude = -1.0;
    let err = propagate_pass(&s.satellite, &nice(), &s.optics, s.epoch, 60.0, 1.0).unwrap_err();
    assert!(matches!(err, orbilink::Error::Config(_)), "{err}");
}

#[test]
fn profile_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nice.csv");
    let p = micius_like(100).profile(0).unwrap();
    write_profile(&p, &path).unwrap();
    assert_eq!(read_profile(&path).unwrap(), p);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# station=nice epoch=2023-01-02T10:00:00"));
    assert_eq!(text.lines().nth(1), Some(PROFILE_HEADER));
    assert!(!dir.path().join("nice.csv.tmp").exists());
}

#[test]
fn decreasing_time_is_rejected_with_row() {
    let text = "# station=x epoch=2023-01-02T10:00:00Z step_s=1\n\
                t_s,distance_m,elevation_deg,radial_velocity_mps,eta,visible\n\
                0,5e5,40,10,0.01,1\n\
                1,5e5,40,10,0.01,1\n\
                0.5,5e5,40,10,0.01,1\n";
    let err = read_profile_from(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("t_s"), "{err}");
}

proptest! {
    #[test]
    fn link_budget_monotone(
        d1 in 2e5f64..3e6, d2 in 2e5f64..3e6,
        e1 in 1.0f64..90.0, e2 in 1.0f64..90.0,
        tz in 0.1f64..1.0,
    ) {
        let s = micius_like(10);
        let station = GroundStation::new("x", 0.0, 0.0);
        let optics = OpticalParams { zenith_atmospheric_transmission: tz, ..OpticalParams::default() };
        let eta = |d: f64, e: f64| {
            link_budget(&LinkGeometry { distance: d, elevation: e, visible: true }, &s.satellite, &station, &optics).unwrap()
        };
        let (near, far) = (d1.min(d2), d1.max(d2));
        let (low, high) = (e1.min(e2), e1.max(e2));
        prop_assert!(eta(near, e1) >= eta(far, e1));
        prop_assert!(eta(d1, high) >= eta(d1, low));
        prop_assert!((0.0..=1.0).contains(&eta(d1, e1)));
        prop_assert!(geometric_gain(0.1, 1.0, 1550e-9, d1) <= 1.0);
        prop_assert_eq!(eta(d1, e1).to_bits(), eta(d1, e1).to_bits());
    }
}
