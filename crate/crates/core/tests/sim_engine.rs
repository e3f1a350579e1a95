mod common;

use orbilink::analytics::LinkParams;
use orbilink::scenario::micius_like;
use orbilink::sim_engine::*;

fn params(m: u32) -> LinkParams {
    LinkParams::with_memory(m)
}

fn dual_reference(m: u32, policy: AllocationPolicy, seed: u64) -> SimConfig {
    let p = micius_like(m).profiles().unwrap();
    SimConfig::dual([p[0].clone(), p[1].clone()], [params(m); 2], policy, seed)
}

/// Sweeps round intervals and checks that no leg overlaps itself and the
/// satellite never has more slots in flight than it owns.
fn check_slots(cfg: &SimConfig, rounds: &[Round]) {
    let m_s = cfg.satellite_slots();
    let mut edges: Vec<(f64, i64)> = Vec::new();
    for leg in 0..cfg.legs() {
        let mine: Vec<&Round> = rounds.iter().filter(|r| r.leg == leg).collect();
        for w in mine.windows(2) {
            assert!(w[1].start_time >= w[0].confirm_time, "leg {leg} rounds overlap");
        }
    }
    for r in rounds {
        let p = &cfg.link_params[r.leg];
        assert!(r.train_length >= 1 && r.train_length <= p.m_sat.min(p.m_ground));
        assert_eq!(r.outcomes.len(), r.train_length as usize);
        let expected = r.start_time + f64::from(r.train_length - 1) * p.emission_period + r.t_rt;
        assert!((r.confirm_time - expected).abs() < 1e-12);
        assert!(r.confirm_time < cfg.horizon());
        edges.push((r.start_time, i64::from(r.train_length)));
        edges.push((r.confirm_time, -i64::from(r.train_length)));
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut busy = 0;
    for (_, d) in edges {
        busy += d;
        assert!(busy >= 0 && busy <= i64::from(m_s), "{busy} slots in flight");
    }
}

#[test]
fn slot_conservation_single_and_dual() {
    let single = SimConfig::single(micius_like(100).profile(0).unwrap(), params(100), 3);
    check_slots(&single, &run(&single).unwrap().rounds);
    for policy in [AllocationPolicy::Static { m_a: 48, m_b: 52 }, AllocationPolicy::DynamicInt] {
        let cfg = dual_reference(100, policy, 3);
        check_slots(&cfg, &run(&cfg).unwrap().rounds);
    }
}

#[test]
fn no_emission_without_visibility() {
    let cfg = dual_reference(50, AllocationPolicy::DynamicInt, 9);
    for r in run(&cfg).unwrap().rounds {
        let s = cfg.profiles[r.leg].sample_at(r.start_time).unwrap();
        assert!(s.visible && s.eta > 0.0, "leg {} at {}", r.leg, r.start_time);
    }
}

#[test]
fn same_seed_same_result_and_different_seed_differs() {
    let cfg = SimConfig::single(micius_like(50).profile(0).unwrap(), params(50), 42);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    let c = run(&cfg.with_seed(43)).unwrap();
    assert_ne!(a.leg_counts(0), c.leg_counts(0));
    assert_eq!(a.rounds.len(), c.rounds.len());
}

#[test]
fn replay_round_trips_through_ndjson() {
    let cfg = dual_reference(10, AllocationPolicy::Static { m_a: 5, m_b: 5 }, 5);
    let sim = run(&cfg).unwrap();
    let mut buf = Vec::new();
    write_round_log(&sim.round_log(), &mut buf).unwrap();
    let log = read_round_log(buf.as_slice()).unwrap();
    assert_eq!(replay(&cfg, &log).unwrap(), sim);

    let mut stale = log.clone();
    stale.engine_version = "orbilink-sim/0".into();
    assert!(matches!(replay(&cfg, &stale), Err(orbilink::Error::Replay(_))));
}

#[test]
fn opaque_channel_gives_nothing() {
    let cfg = SimConfig::single(common::constant(20.0, 0.004, 0.0, 0.0), params(10), 1);
    let sim = run(&cfg).unwrap();
    assert_eq!(sim.leg_totals, [0, 0]);
}

#[test]
fn perfect_channel_runs_at_memory_over_round_trip() {
    let (m, t_rt, duration) = (10u32, 0.002, 60.0);
    let mut p = params(m);
    p.p_bsm = 1.0;
    let mut cfg = SimConfig::single(common::constant(duration, t_rt, 1.0, 0.0), p, 1);
    cfg.drift = DriftModel::Off;
    let sim = run(&cfg).unwrap();
    let period = f64::from(m - 1) * p.emission_period + t_rt;
    let rounds = ((duration / period).ceil() - 1.0) as u64;
    assert!(sim.leg_totals[0].abs_diff(rounds * u64::from(m)) <= u64::from(m));
    let rate = sim.leg_totals[0] as f64 / duration;
    assert!((rate - f64::from(m) / t_rt).abs() / (f64::from(m) / t_rt) < 0.01, "{rate}");
    assert!(sim.rounds.iter().all(|r| r.latched() == u64::from(m)));
}

#[test]
fn drift_caps_latchable_photons() {
    let mut p = params(100);
    p.p_bsm = 1.0;
    let cfg = SimConfig::single(common::constant(5.0, 0.004, 1.0, 6998.0), p, 1);
    let sim = run(&cfg).unwrap();
    for r in &sim.rounds {
        let eligible = r.outcomes.iter().filter(|o| **o != PhotonOutcome::DriftedOut).count();
        assert_eq!(eligible, 65);
        assert!(r.outcomes[..65].iter().all(|o| *o == PhotonOutcome::Latched));
        assert!((eligible as i64 - 67).abs() <= 3);
    }
    let off = SimConfig { drift: DriftModel::Off, ..cfg };
    assert!(run(&off).unwrap().rounds.iter().all(|r| r.latched() == 100));
}

#[test]
fn one_dark_leg_means_no_swaps() {
    let lit = common::constant(30.0, 0.004, 0.02, 0.0);
    let dark = common::constant(30.0, 0.004, 0.0, 0.0);
    let mut cfg = SimConfig::dual([lit, dark], [params(10); 2], AllocationPolicy::Static { m_a: 5, m_b: 5 }, 7);
    cfg.pair_cutoff = None;
    let sim = run(&cfg).unwrap();
    assert_eq!(sim.end_to_end_total, 0);
    assert!(sim.leg_totals[0] > 0);
    assert_eq!(sim.leg_totals[1], 0);
    assert_eq!(sim.leftover, [sim.leg_totals[0], 0]);
}

#[test]
fn symmetric_legs_swap_almost_everything() {
    let p = common::constant(60.0, 0.004, 0.02, 0.0);
    let cfg = SimConfig::dual([p.clone(), p], [params(20); 2], AllocationPolicy::Static { m_a: 10, m_b: 10 }, 8);
    let sim = run(&cfg).unwrap();
    let leg = sim.leg_totals[0].min(sim.leg_totals[1]) as f64;
    let ratio = sim.end_to_end_total as f64 / leg;
    assert!(ratio > 0.9 && ratio <= 1.0, "{ratio}");
    assert!(sim.end_to_end_total <= sim.leg_totals[0].min(sim.leg_totals[1]));
    let accounted = sim.end_to_end_total + sim.expired[0] + sim.leftover[0] + sim.dropped[0];
    assert_eq!(accounted, sim.leg_totals[0]);
}

#[test]
fn bounded_buffer_drops_overflow() {
    let lit = common::constant(10.0, 0.004, 0.05, 0.0);
    let dark = common::constant(10.0, 0.004, 0.0, 0.0);
    let mut cfg = SimConfig::dual([lit, dark], [params(10); 2], AllocationPolicy::Static { m_a: 5, m_b: 5 }, 2);
    cfg.pair_cutoff = None;
    cfg.buffer_capacity = Some(7);
    let sim = run(&cfg).unwrap();
    assert_eq!(sim.leftover[0], 7);
    assert_eq!(sim.dropped[0], sim.leg_totals[0] - 7);
}

#[test]
fn misaligned_profiles_rejected() {
    let a = common::constant(30.0, 0.004, 0.02, 0.0);
    let b = common::constant(20.0, 0.004, 0.02, 0.0);
    let cfg = SimConfig::dual([a, b], [params(10); 2], AllocationPolicy::DynamicInt, 1);
    assert!(run(&cfg).is_err());
}

#[test]
fn csv_output_has_contract_header() {
    let cfg = SimConfig::single(common::constant(5.0, 0.004, 0.02, 0.0), params(10), 1);
    let sim = run(&cfg).unwrap();
    let mut buf = Vec::new();
    write_sim_csv(&sim, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some(SIM_CSV_HEADER));
    let rows = read_sim_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows.iter().map(|r| r.1[0]).sum::<u64>(), sim.leg_totals[0]);
}
