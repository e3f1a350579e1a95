//! Closed-form rate model for satellite downlinks with quantum memories.
//!
//! A round of the sender/receiver protocol holds each satellite slot for one
//! round trip, so a leg delivers at most `p_bsm·η·N/t_rt` pairs per second.
//! The satellite's radial motion shifts successive photons of a train by
//! `v_r·T_em/c`, which caps the useful train length at
//! `w_i·c/(|v_r|·T_em)`. With two legs and onboard swapping the end-to-end
//! rate is the minimum of the two leg rates, and the memory split that
//! equalizes them is the optimum.

use serde::{Deserialize, Serialize};

use crate::pass_model::{PassProfile, PassSample};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Protocol and hardware constants of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Photon emission period `T_em`, seconds.
    pub emission_period: f64,
    /// Acceptance window `w_i` of the latching measurement, seconds.
    pub acceptance_window: f64,
    pub p_bsm: f64,
    /// Satellite memory slots `m_S`.
    pub m_sat: u32,
    /// Ground memory slots `m_G`.
    pub m_ground: u32,
    /// Added to the light round trip, seconds.
    pub processing_delay: f64,
    pub light_speed: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            emission_period: 1e-6,
            acceptance_window: 1.5e-9,
            p_bsm: 0.5,
            m_sat: 10,
            m_ground: 10,
            processing_delay: 0.0,
            light_speed: SPEED_OF_LIGHT,
        }
    }
}

impl LinkParams {
    /// Defaults with `m_S = m_G = m_sat`.
    pub fn with_memory(m_sat: u32) -> Self {
        Self {
            m_sat,
            m_ground: m_sat,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_sat == 0 {
            return Err(Error::Config("m_sat must be >= 1".into()));
        }
        if self.m_sat > self.m_ground {
            return Err(Error::Config(format!(
                "m_sat ({}) must not exceed m_ground ({})",
                self.m_sat, self.m_ground
            )));
        }
        if !(self.p_bsm > 0.0 && self.p_bsm <= 1.0) {
            return Err(Error::Config(format!("p_bsm = {} outside (0, 1]", self.p_bsm)));
        }
        if !(self.emission_period > 0.0 && self.acceptance_window > 0.0 && self.light_speed > 0.0) {
            return Err(Error::Config(
                "emission period, acceptance window and light speed must be > 0".into(),
            ));
        }
        if !(self.processing_delay >= 0.0) {
            return Err(Error::Config("processing delay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Instantaneous channel state of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub eta: f64,
    /// Round-trip time, seconds.
    pub t_rt: f64,
    pub v_r: f64,
}

impl LinkState {
    pub fn from_sample(sample: &PassSample, params: &LinkParams) -> Self {
        Self {
            eta: sample.eta,
            t_rt: round_trip_time(sample.distance, params),
            v_r: sample.radial_velocity,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.t_rt > 0.0) {
            return Err(Error::Domain(format!("round-trip time {} must be > 0", self.t_rt)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Domain(format!("eta {} outside [0, 1]", self.eta)));
        }
        Ok(())
    }
}

/// One leg of a dual link: its current state and its constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub state: LinkState,
    pub params: LinkParams,
}

/// Per-photon arrival shift caused by the satellite's radial motion (signed).
pub fn differential_shift(v_r: f64, params: &LinkParams) -> f64 {
    v_r * params.emission_period / params.light_speed
}

/// Real-valued train-length bound `w_i·c/(|v_r|·T_em)`; infinite for `v_r = 0`.
pub fn train_length_bound(v_r: f64, params: &LinkParams) -> f64 {
    if v_r == 0.0 {
        f64::INFINITY
    } else {
        params.acceptance_window * params.light_speed / (v_r.abs() * params.emission_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrainLength {
    Bounded(u64),
    Unbounded,
}

impl TrainLength {
    pub fn bounded(self) -> Option<u64> {
        match self {
            TrainLength::Bounded(n) => Some(n),
            TrainLength::Unbounded => None,
        }
    }
}

/// Largest useful photon train length, floored to an integer.
pub fn max_train_length(v_r: f64, params: &LinkParams) -> TrainLength {
    let bound = train_length_bound(v_r, params);
    if bound.is_finite() {
        TrainLength::Bounded(bound.floor() as u64)
    } else {
        TrainLength::Unbounded
    }
}

/// Best attainable rate `p_bsm·η·N/t_rt` with trains of `n` photons.
pub fn single_link_rate(state: &LinkState, n: u32, params: &LinkParams) -> Result<f64> {
    state.check()?;
    if n == 0 {
        return Err(Error::Domain("train length must be >= 1".into()));
    }
    Ok(params.p_bsm * state.eta * f64::from(n) / state.t_rt)
}

/// Rate with the train length capped by differential latency:
/// `p_bsm·(η/t_rt)·min(m_S, w_i·c/(|v_r|·T_em))`.
pub fn corrected_rate(state: &LinkState, params: &LinkParams) -> Result<f64> {
    state.check()?;
    let n = f64::from(params.m_sat).min(train_length_bound(state.v_r, params));
    Ok(params.p_bsm * state.eta * n / state.t_rt)
}

/// `2·L/c` plus the configured processing delay.
pub fn round_trip_time(distance: f64, params: &LinkParams) -> f64 {
    debug_assert!(distance > 0.0);
    2.0 * distance / params.light_speed + params.processing_delay
}

/// End-to-end rate of a swapping dual link with `m_a`/`m_b` slots per leg:
/// the smaller of the two leg rates.
pub fn dual_rate(a: &Leg, m_a: f64, b: &Leg, m_b: f64) -> Result<f64> {
    a.state.check()?;
    b.state.check()?;
    if !(m_a >= 0.0 && m_b >= 0.0) {
        return Err(Error::Domain(format!("memory split ({m_a}, {m_b}) must be non-negative")));
    }
    let ra = a.params.p_bsm * m_a * a.state.eta / a.state.t_rt;
    let rb = b.params.p_bsm * m_b * b.state.eta / b.state.t_rt;
    Ok(ra.min(rb))
}

/// Slots needed per unit of rate on each leg, `t_rt/(p_bsm·η)`. With equal
/// `p_bsm` on both legs the split only depends on `t_rt/η`.
fn slot_costs(a: &Leg, b: &Leg) -> Result<(f64, f64)> {
    a.state.check()?;
    b.state.check()?;
    match (a.state.eta > 0.0, b.state.eta > 0.0) {
        (true, true) => Ok((
            a.state.t_rt / (a.params.p_bsm * a.state.eta),
            b.state.t_rt / (b.params.p_bsm * b.state.eta),
        )),
        (false, false) => Err(Error::NoVisibility("both legs have zero transmission".into())),
        (false, _) => Err(Error::NoVisibility("leg A has zero transmission".into())),
        (_, false) => Err(Error::NoVisibility("leg B has zero transmission".into())),
    }
}

/// Real-valued split of `m_s` slots that equalizes the two leg rates.
pub fn allocate_real(a: &Leg, b: &Leg, m_s: u32) -> Result<(f64, f64)> {
    let (x, y) = slot_costs(a, b)?;
    let m_a = f64::from(m_s) * x / (x + y);
    Ok((m_a, f64::from(m_s) - m_a))
}

/// Best integer split: `m_A = ⌈(m_S−1)·x/(x+y)⌉`, `m_B = m_S − m_A`.
///
/// `m_B` is written as the complement rather than `⌊(m_S−1)·y/(x+y) + 1⌋`;
/// the two are equal in exact arithmetic and the complement keeps the sum
/// exact in floating point.
pub fn allocate_int(a: &Leg, b: &Leg, m_s: u32) -> Result<(u32, u32)> {
    if m_s < 2 {
        return Err(Error::Domain(format!("cannot split {m_s} slot(s) between two legs")));
    }
    let (x, y) = slot_costs(a, b)?;
    let m_a = (f64::from(m_s - 1) * x / (x + y)).ceil() as u32;
    let m_a = m_a.clamp(1, m_s - 1);
    Ok((m_a, m_s - m_a))
}

fn legs_at(
    pa: &PassProfile,
    params_a: &LinkParams,
    pb: &PassProfile,
    params_b: &LinkParams,
    i: usize,
) -> Option<(Leg, Leg)> {
    let (sa, sb) = (&pa.samples()[i], &pb.samples()[i]);
    (sa.visible && sb.visible && sa.eta > 0.0 && sb.eta > 0.0).then(|| {
        (
            Leg {
                state: LinkState::from_sample(sa, params_a),
                params: *params_a,
            },
            Leg {
                state: LinkState::from_sample(sb, params_b),
                params: *params_b,
            },
        )
    })
}

fn check_pair(pa: &PassProfile, params_a: &LinkParams, pb: &PassProfile, params_b: &LinkParams) -> Result<u32> {
    params_a.validate()?;
    params_b.validate()?;
    pa.check_aligned(pb)?;
    if params_a.m_sat != params_b.m_sat {
        return Err(Error::Config(format!(
            "legs disagree on satellite memory ({} vs {})",
            params_a.m_sat, params_b.m_sat
        )));
    }
    Ok(params_a.m_sat)
}

/// Static split used throughout a pass: the per-sample integer allocation
/// at the sample where it yields the highest end-to-end rate. Ties go to the
/// smaller `m_A`.
pub fn best_static_split(
    pa: &PassProfile,
    params_a: &LinkParams,
    pb: &PassProfile,
    params_b: &LinkParams,
) -> Result<(u32, u32)> {
    let m_s = check_pair(pa, params_a, pb, params_b)?;
    let mut best: Option<(f64, u32)> = None;
    for i in 0..pa.len() {
        let Some((a, b)) = legs_at(pa, params_a, pb, params_b, i) else {
            continue;
        };
        let (m_a, m_b) = allocate_int(&a, &b, m_s)?;
        let rate = dual_rate(&a, f64::from(m_a), &b, f64::from(m_b))?;
        best = match best {
            Some((r, m)) if r > rate || (r == rate && m <= m_a) => Some((r, m)),
            _ => Some((rate, m_a)),
        };
    }
    let (_, m_a) = best.ok_or(Error::NoOverlap)?;
    Ok((m_a, m_s - m_a))
}

/// Which single-link expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleRateModel {
    /// `N = m_S`, no differential-latency cap.
    Uncorrected,
    Corrected,
}

/// Memory split policy for a dual link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    RealDynamic,
    IntDynamic,
    Static { m_a: u32, m_b: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub t: f64,
    pub rate: f64,
    /// Slots given to each leg; `None` for single links and for samples
    /// where the dynamic split is undefined.
    pub m_a: Option<f64>,
    pub m_b: Option<f64>,
}

/// Per-sample single-link rate; zero where the satellite is not visible.
pub fn single_rate_series(
    profile: &PassProfile,
    params: &LinkParams,
    model: SingleRateModel,
) -> Result<Vec<RatePoint>> {
    params.validate()?;
    profile
        .samples()
        .iter()
        .map(|s| {
            let rate = if s.visible {
                let state = LinkState::from_sample(s, params);
                match model {
                    SingleRateModel::Uncorrected => single_link_rate(&state, params.m_sat, params)?,
                    SingleRateModel::Corrected => corrected_rate(&state, params)?,
                }
            } else {
                0.0
            };
            Ok(RatePoint {
                t: s.t,
                rate,
                m_a: None,
                m_b: None,
            })
        })
        .collect()
}

/// Per-sample end-to-end rate under `policy`; zero where the legs are not
/// both visible.
pub fn dual_rate_series(
    pa: &PassProfile,
    params_a: &LinkParams,
    pb: &PassProfile,
    params_b: &LinkParams,
    policy: SplitPolicy,
) -> Result<Vec<RatePoint>> {
    let m_s = check_pair(pa, params_a, pb, params_b)?;
    if let SplitPolicy::Static { m_a, m_b } = policy {
        if m_a + m_b != m_s {
            return Err(Error::Config(format!(
                "static split ({m_a}, {m_b}) does not sum to {m_s}"
            )));
        }
    }
    (0..pa.len())
        .map(|i| {
            let t = pa.samples()[i].t;
            let Some((a, b)) = legs_at(pa, params_a, pb, params_b, i) else {
                let (m_a, m_b) = match policy {
                    SplitPolicy::Static { m_a, m_b } => (Some(f64::from(m_a)), Some(f64::from(m_b))),
                    _ => (None, None),
                };
                return Ok(RatePoint { t, rate: 0.0, m_a, m_b });
            };
            let (m_a, m_b) = match policy {
                SplitPolicy::RealDynamic => allocate_real(&a, &b, m_s)?,
                SplitPolicy::IntDynamic => {
                    let (x, y) = allocate_int(&a, &b, m_s)?;
                    (f64::from(x), f64::from(y))
                }
                SplitPolicy::Static { m_a, m_b } => (f64::from(m_a), f64::from(m_b)),
            };
            Ok(RatePoint {
                t,
                rate: dual_rate(&a, m_a, &b, m_b)?,
                m_a: Some(m_a),
                m_b: Some(m_b),
            })
        })
        .collect()
}

/// Pairs delivered over a sampled rate series (rate × step, summed).
pub fn integrated_pairs(series: &[RatePoint], step: f64) -> f64 {
    series.iter().map(|p| p.rate * step).sum()
}

/// Allocations and resulting rates at every co-visible sample of a pass.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub m_S: u32,
    pub t: Vec<f64>,
    pub m_A_real: Vec<f64>,
    pub m_B_real: Vec<f64>,
    pub m_A_int: Vec<u32>,
    pub m_B_int: Vec<u32>,
    pub rate_real: Vec<f64>,
    pub rate_int: Vec<f64>,
    pub static_split: (u32, u32),
    pub static_rate: Vec<f64>,
}

impl AllocationResult {
    pub fn compute(
        pa: &PassProfile,
        params_a: &LinkParams,
        pb: &PassProfile,
        params_b: &LinkParams,
    ) -> Result<Self> {
        let m_s = check_pair(pa, params_a, pb, params_b)?;
        let static_split = best_static_split(pa, params_a, pb, params_b)?;
        let mut out = AllocationResult {
            m_S: m_s,
            t: Vec::new(),
            m_A_real: Vec::new(),
            m_B_real: Vec::new(),
            m_A_int: Vec::new(),
            m_B_int: Vec::new(),
            rate_real: Vec::new(),
            rate_int: Vec::new(),
            static_split,
            static_rate: Vec::new(),
        };
        for i in 0..pa.len() {
            let Some((a, b)) = legs_at(pa, params_a, pb, params_b, i) else {
                continue;
            };
            let (ra, rb) = allocate_real(&a, &b, m_s)?;
            let (ia, ib) = allocate_int(&a, &b, m_s)?;
            out.t.push(pa.samples()[i].t);
            out.m_A_real.push(ra);
            out.m_B_real.push(rb);
            out.m_A_int.push(ia);
            out.m_B_int.push(ib);
            out.rate_real.push(dual_rate(&a, ra, &b, rb)?);
            out.rate_int.push(dual_rate(&a, f64::from(ia), &b, f64::from(ib))?);
            out.static_rate.push(dual_rate(
                &a,
                f64::from(static_split.0),
                &b,
                f64::from(static_split.1),
            )?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leg(eta: f64, t_rt: f64) -> Leg {
        Leg {
            state: LinkState { eta, t_rt, v_r: 0.0 },
            params: LinkParams::with_memory(100),
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn differential_shift_examples() {
        let p = LinkParams::default();
        assert_eq!(differential_shift(0.0, &p), 0.0);
        // 6998 * 1e-6 / 299792458
        assert!(rel(differential_shift(6998.0, &p), 2.334_281_538_196_668e-11) < 1e-12);
        let p2 = LinkParams {
            emission_period: 2e-6,
            ..p
        };
        assert_eq!(differential_shift(6998.0, &p2), 2.0 * differential_shift(6998.0, &p));
        assert!(differential_shift(-10.0, &p) < 0.0);
    }

    #[test]
    fn train_length_examples() {
        let p = LinkParams::default();
        assert_eq!(max_train_length(0.0, &p), TrainLength::Unbounded);
        assert_eq!(max_train_length(6998.0, &p), TrainLength::Bounded(64));
        assert_eq!(max_train_length(-6998.0, &p), TrainLength::Bounded(64));
        let half = LinkParams {
            acceptance_window: 0.75e-9,
            ..p
        };
        assert_eq!(max_train_length(6998.0, &half), TrainLength::Bounded(32));
    }

    #[test]
    fn single_rate_examples() {
        let p = LinkParams::default();
        let s = LinkState {
            eta: 0.01,
            t_rt: 4e-3,
            v_r: 0.0,
        };
        assert!(rel(single_link_rate(&s, 100, &p).unwrap(), 125.0) < 1e-12);
        assert_eq!(single_link_rate(&s, 200, &p).unwrap(), 2.0 * single_link_rate(&s, 100, &p).unwrap());
        let dark = LinkState { eta: 0.0, ..s };
        assert_eq!(single_link_rate(&dark, 100, &p).unwrap(), 0.0);
        let bad = LinkState { t_rt: 0.0, ..s };
        assert!(matches!(single_link_rate(&bad, 10, &p), Err(Error::Domain(_))));
        assert!(single_link_rate(&s, 0, &p).is_err());
    }

    #[test]
    fn correction_activates_only_for_large_memories() {
        let s = LinkState {
            eta: 0.01,
            t_rt: 4e-3,
            v_r: 6998.0,
        };
        let p10 = LinkParams::with_memory(10);
        assert_eq!(
            corrected_rate(&s, &p10).unwrap(),
            single_link_rate(&s, 10, &p10).unwrap()
        );
        let p100 = LinkParams::with_memory(100);
        let bound: f64 = 1.5e-9 * 299_792_458.0 / (6998.0 * 1e-6);
        assert!((bound - 64.26).abs() < 0.01);
        let expected = 0.5 * 0.01 / 4e-3 * bound;
        assert!(rel(corrected_rate(&s, &p100).unwrap(), expected) < 1e-12);
        let still = LinkState { v_r: 0.0, ..s };
        assert_eq!(
            corrected_rate(&still, &p100).unwrap(),
            single_link_rate(&still, 100, &p100).unwrap()
        );
    }

    #[test]
    fn round_trip_examples() {
        let p = LinkParams::default();
        assert!(rel(round_trip_time(3e5, &p), 2.001_384_571_188_912_3e-3) < 1e-12);
        assert!(rel(round_trip_time(5e5, &p), 3.335_640_951_981_520_5e-3) < 1e-12);
        let slow = LinkParams {
            processing_delay: 1e-3,
            ..p
        };
        assert!((round_trip_time(5e5, &slow) - round_trip_time(5e5, &p) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn dual_rate_examples() {
        let a = leg(0.01, 4e-3);
        assert_eq!(dual_rate(&a, 50.0, &a, 50.0).unwrap(), 0.5 * 50.0 * 0.01 / 4e-3);
        assert_eq!(dual_rate(&leg(0.0, 4e-3), 50.0, &a, 50.0).unwrap(), 0.0);
        assert!(dual_rate(&a, -1.0, &a, 50.0).is_err());
    }

    #[test]
    fn allocation_one_to_three() {
        // t/eta ratios 1:3
        let a = leg(0.03, 3e-3);
        let b = leg(0.01, 3e-3);
        let (ma, mb) = allocate_real(&a, &b, 100).unwrap();
        assert!((ma - 25.0).abs() < 1e-12 && (mb - 75.0).abs() < 1e-12);
        let ra = 0.5 * ma * 0.03 / 3e-3;
        let rb = 0.5 * mb * 0.01 / 3e-3;
        assert!(rel(ra, rb) < 1e-12);
        assert!(rel(dual_rate(&a, ma, &b, mb).unwrap(), ra) < 1e-12);
    }

    #[test]
    fn symmetric_legs_split_evenly() {
        let a = leg(0.02, 5e-3);
        assert_eq!(allocate_real(&a, &a, 100).unwrap(), (50.0, 50.0));
        assert_eq!(allocate_int(&a, &a, 10).unwrap(), (5, 5));
        assert_eq!(allocate_int(&a, &a, 11).unwrap(), (5, 6));
    }

    #[test]
    fn allocation_errors() {
        let dark = leg(0.0, 5e-3);
        let a = leg(0.02, 5e-3);
        assert!(matches!(allocate_real(&dark, &dark, 10), Err(Error::NoVisibility(_))));
        assert!(matches!(allocate_int(&dark, &a, 10), Err(Error::NoVisibility(_))));
        assert!(allocate_int(&a, &a, 1).is_err());
    }

    #[test]
    fn params_validation() {
        LinkParams::default().validate().unwrap();
        let bad = LinkParams {
            m_sat: 20,
            m_ground: 10,
            ..LinkParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = LinkParams {
            p_bsm: 0.0,
            ..LinkParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
