use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::pool::PairBuffer;
use super::{AllocationPolicy, DriftModel, MemoryPool, PhotonOutcome, Round, SimConfig, SimResult};
use crate::analytics::{allocate_int, differential_shift, round_trip_time, Leg, LinkParams, LinkState};

/// Photon `k` (0-based) of a train misses the acceptance window once the
/// accumulated shift `k·|δt|` exceeds it. The first photon is always in sync.
pub fn photon_drifted_out(k: u32, shift: f64, acceptance_window: f64) -> bool {
    f64::from(k) * shift.abs() > acceptance_window
}

/// Number of photons in a train of `n` that can still be latched.
pub fn latch_eligible(n: u32, v_r: f64, params: &LinkParams, drift: DriftModel) -> u32 {
    if drift == DriftModel::Off {
        return n;
    }
    let shift = differential_shift(v_r, params);
    (0..n)
        .filter(|&k| !photon_drifted_out(k, shift, params.acceptance_window))
        .count() as u32
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    /// Recompute the dynamic split at profile sample `idx`.
    Reallocate { idx: usize },
    TryStart,
    Confirm { round: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// 0 for satellite-wide control, `leg + 1` otherwise.
    lane: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.lane.cmp(&other.lane))
            .then(self.seq.cmp(&other.seq))
    }
}

pub(super) struct Engine<'a> {
    cfg: &'a SimConfig,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    satellite: MemoryPool,
    ground: Vec<MemoryPool>,
    buffers: Vec<PairBuffer>,
    quota: Vec<u32>,
    blocked: Vec<bool>,
    rng: Option<Xoshiro256PlusPlus>,
    result: SimResult,
}

impl<'a> Engine<'a> {
    pub(super) fn new(cfg: &'a SimConfig, sample_outcomes: bool) -> Self {
        let legs = cfg.legs();
        Self {
            cfg,
            queue: BinaryHeap::new(),
            seq: 0,
            satellite: MemoryPool::new(cfg.satellite_slots()),
            ground: cfg.link_params.iter().map(|p| MemoryPool::new(p.m_ground)).collect(),
            buffers: vec![PairBuffer::default(); legs],
            quota: initial_quota(cfg),
            blocked: vec![false; legs],
            rng: sample_outcomes.then(|| Xoshiro256PlusPlus::seed_from_u64(cfg.rng_seed)),
            result: SimResult::empty(cfg),
        }
    }

    fn push(&mut self, time: f64, lane: u8, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Event {
            time,
            lane,
            seq: self.seq,
            kind,
        }));
    }

    pub(super) fn run(mut self) -> SimResult {
        let t0 = self.cfg.start_time();
        if self.cfg.policy == AllocationPolicy::DynamicInt {
            for (idx, s) in self.cfg.profiles[0].samples().iter().enumerate() {
                self.push(s.t, 0, EventKind::Reallocate { idx });
            }
        }
        for leg in 0..self.cfg.legs() {
            self.push(t0, leg as u8 + 1, EventKind::TryStart);
        }
        while let Some(Reverse(ev)) = self.queue.pop() {
            match ev.kind {
                EventKind::Reallocate { idx } => self.reallocate(idx, ev.time),
                EventKind::TryStart => self.try_start(usize::from(ev.lane - 1), ev.time),
                EventKind::Confirm { round } => self.confirm(round, ev.time),
            }
            debug_assert!(self.satellite.is_consistent());
            debug_assert!(self.ground.iter().all(MemoryPool::is_consistent));
        }
        for (leg, b) in self.buffers.iter().enumerate() {
            self.result.leftover[leg] = b.len();
        }
        self.result
    }

    fn wake_blocked(&mut self, now: f64) {
        for leg in 0..self.blocked.len() {
            if std::mem::take(&mut self.blocked[leg]) {
                self.push(now, leg as u8 + 1, EventKind::TryStart);
            }
        }
    }

    fn reallocate(&mut self, idx: usize, now: f64) {
        if let Some(split) = split_at(self.cfg, idx) {
            self.quota = vec![split.0, split.1];
        }
        self.wake_blocked(now);
    }

    fn try_start(&mut self, leg: usize, now: f64) {
        let cfg = self.cfg;
        let profile = &cfg.profiles[leg];
        let params = &cfg.link_params[leg];
        let Some(idx) = profile.sample_index_at(now) else {
            return;
        };
        let sample = &profile.samples()[idx];
        if !sample.visible {
            // Wait for the station to come back into view.
            if let Some(next) = profile.samples()[idx + 1..].iter().find(|s| s.visible) {
                self.push(next.t, leg as u8 + 1, EventKind::TryStart);
            }
            return;
        }
        let n = self.quota[leg]
            .min(self.satellite.free_slots)
            .min(self.ground[leg].free_slots);
        if n == 0 {
            self.blocked[leg] = true;
            return;
        }
        let t_rt = round_trip_time(sample.distance, params);
        let confirm_time = now + f64::from(n - 1) * params.emission_period + t_rt;
        if confirm_time >= cfg.horizon() {
            return;
        }
        debug_assert!(n <= params.m_sat.min(params.m_ground));
        self.satellite.reserve(n);
        self.ground[leg].reserve(n);

        let outcomes = match self.rng.as_mut() {
            Some(rng) => {
                let shift = differential_shift(sample.radial_velocity, params);
                let drift = cfg.drift == DriftModel::On;
                (0..n)
                    .map(|k| {
                        let transported = rng.gen::<f64>() < sample.eta;
                        let latched = rng.gen::<f64>() < params.p_bsm;
                        if drift && photon_drifted_out(k, shift, params.acceptance_window) {
                            PhotonOutcome::DriftedOut
                        } else if transported && latched {
                            PhotonOutcome::Latched
                        } else {
                            PhotonOutcome::Lost
                        }
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        let round = self.result.rounds.len();
        self.result.rounds.push(Round {
            leg,
            start_time: now,
            train_length: n,
            v_r_at_start: sample.radial_velocity,
            eta: sample.eta,
            t_rt,
            confirm_time,
            outcomes,
        });
        self.push(confirm_time, leg as u8 + 1, EventKind::Confirm { round });
    }

    fn confirm(&mut self, round: usize, now: f64) {
        let (leg, n, latched) = {
            let r = &self.result.rounds[round];
            (r.leg, r.train_length, r.latched())
        };
        self.satellite.release(n);
        self.ground[leg].release(n);
        let bin = self.cfg.bin_index(now);
        self.result.bins[bin].legs[leg] += latched;
        self.result.leg_totals[leg] += latched;
        let swaps = settle(self.cfg, &mut self.buffers, &mut self.result, leg, latched, now);
        self.result.bins[bin].end_to_end += swaps;
        self.result.end_to_end_total += swaps;
        for (g, b) in self.ground.iter_mut().zip(&self.buffers) {
            g.entangled_buffer = b.len();
        }
        self.push(now, leg as u8 + 1, EventKind::TryStart);
        self.wake_blocked(now);
    }
}

/// Buffers `latched` new pairs of `leg` confirmed at `now`, drops expired
/// ones, and swaps as many pairs as both buffers allow. Returns the number
/// of swaps.
fn settle(cfg: &SimConfig, buffers: &mut [PairBuffer], result: &mut SimResult, leg: usize, latched: u64, now: f64) -> u64 {
    let stored = buffers[leg].deposit(now, latched, cfg.buffer_capacity);
    result.dropped[leg] += latched - stored;
    if buffers.len() < 2 {
        return 0;
    }
    for (i, b) in buffers.iter_mut().enumerate() {
        result.expired[i] += b.expire(now, cfg.pair_cutoff);
    }
    let swaps = buffers[0].len().min(buffers[1].len());
    buffers[0].take(swaps);
    buffers[1].take(swaps);
    swaps
}

fn split_at(cfg: &SimConfig, idx: usize) -> Option<(u32, u32)> {
    let (pa, pb) = (&cfg.profiles[0], &cfg.profiles[1]);
    let (sa, sb) = (&pa.samples()[idx], &pb.samples()[idx]);
    if !(sa.visible && sb.visible && sa.eta > 0.0 && sb.eta > 0.0) {
        return None;
    }
    let leg = |s, p: &LinkParams| Leg {
        state: LinkState::from_sample(s, p),
        params: *p,
    };
    allocate_int(
        &leg(sa, &cfg.link_params[0]),
        &leg(sb, &cfg.link_params[1]),
        cfg.satellite_slots(),
    )
    .ok()
}

fn initial_quota(cfg: &SimConfig) -> Vec<u32> {
    let m_s = cfg.satellite_slots();
    match cfg.policy {
        AllocationPolicy::Single => vec![m_s],
        AllocationPolicy::Static { m_a, m_b } => vec![m_a, m_b],
        AllocationPolicy::DynamicInt => {
            let first = (0..cfg.profiles[0].len()).find_map(|i| split_at(cfg, i));
            let (a, b) = first.unwrap_or((m_s / 2, m_s - m_s / 2));
            vec![a, b]
        }
    }
}

/// Recomputes bins and swaps from recorded rounds, processing confirmations
/// in event order (time, leg, round index).
pub(super) fn accumulate(cfg: &SimConfig, rounds: Vec<Round>) -> SimResult {
    let mut result = SimResult::empty(cfg);
    let mut order: Vec<usize> = (0..rounds.len()).collect();
    order.sort_by(|&a, &b| {
        rounds[a]
            .confirm_time
            .total_cmp(&rounds[b].confirm_time)
            .then(rounds[a].leg.cmp(&rounds[b].leg))
            .then(a.cmp(&b))
    });
    let mut buffers = vec![PairBuffer::default(); cfg.legs()];
    for i in order {
        let r = &rounds[i];
        let latched = r.latched();
        let bin = cfg.bin_index(r.confirm_time);
        result.bins[bin].legs[r.leg] += latched;
        result.leg_totals[r.leg] += latched;
        let swaps = settle(cfg, &mut buffers, &mut result, r.leg, latched, r.confirm_time);
        result.bins[bin].end_to_end += swaps;
        result.end_to_end_total += swaps;
    }
    for (leg, b) in buffers.iter().enumerate() {
        result.leftover[leg] = b.len();
    }
    result.rounds = rounds;
    result
}
