//! Seeded discrete-event simulation of the sender/receiver link protocol.
//!
//! Each leg runs strictly alternating rounds: the satellite emits a train of
//! `N` photons (one per free slot pair), waits one round trip for the ground
//! station's latching results, frees the failed slots and starts again.
//! Confirmed pairs move to an application buffer; with two legs the
//! satellite swaps one pair from each buffer as soon as both are non-empty.
//!
//! Randomness comes from a single `Xoshiro256PlusPlus` generator seeded with
//! `seed_from_u64` (SplitMix64 expansion). Uniforms are `[0, 1)` doubles
//! built from the top 53 bits of each output. Rounds draw in start order
//! and each photon draws twice: transport loss first, then latching.

mod engine;
mod io;
mod pool;

use serde::{Deserialize, Serialize};

use crate::analytics::LinkParams;
use crate::pass_model::PassProfile;
use crate::{Error, Result};

pub use engine::{photon_drifted_out, latch_eligible};
pub use io::{read_round_log, read_sim_csv, write_round_log, write_sim_csv, RoundLog, SIM_CSV_HEADER};
pub use pool::MemoryPool;

pub const ENGINE_VERSION: &str = "orbilink-sim/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationPolicy {
    /// One leg, all satellite slots.
    Single,
    Static { m_a: u32, m_b: u32 },
    /// Integer optimal split, recomputed at every profile sample where both
    /// legs are visible; held elsewhere.
    DynamicInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftModel {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub profiles: Vec<PassProfile>,
    pub link_params: Vec<LinkParams>,
    pub policy: AllocationPolicy,
    pub rng_seed: u64,
    /// Width of the counting bins, seconds.
    pub bin_width: f64,
    pub drift: DriftModel,
    /// Optional cap on each leg's application buffer; pairs confirmed into a
    /// full buffer are discarded. `None` (the default) is unbounded.
    pub buffer_capacity: Option<u64>,
    /// Longest time, seconds, a confirmed pair may wait in a buffer for a
    /// swap partner before it is discarded. Only meaningful for dual runs;
    /// `None` keeps pairs forever.
    pub pair_cutoff: Option<f64>,
}

/// Default storage limit for pairs awaiting a swap, seconds.
pub const DEFAULT_PAIR_CUTOFF: f64 = 1.0;

impl SimConfig {
    pub fn single(profile: PassProfile, params: LinkParams, rng_seed: u64) -> Self {
        Self {
            profiles: vec![profile],
            link_params: vec![params],
            policy: AllocationPolicy::Single,
            rng_seed,
            bin_width: 1.0,
            drift: DriftModel::On,
            buffer_capacity: None,
            pair_cutoff: None,
        }
    }

    pub fn dual(
        profiles: [PassProfile; 2],
        params: [LinkParams; 2],
        policy: AllocationPolicy,
        rng_seed: u64,
    ) -> Self {
        Self {
            profiles: profiles.into(),
            link_params: params.into(),
            policy,
            rng_seed,
            bin_width: 1.0,
            drift: DriftModel::On,
            buffer_capacity: None,
            pair_cutoff: Some(DEFAULT_PAIR_CUTOFF),
        }
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }

    pub fn legs(&self) -> usize {
        self.profiles.len()
    }

    pub fn satellite_slots(&self) -> u32 {
        self.link_params[0].m_sat
    }

    pub fn start_time(&self) -> f64 {
        self.profiles[0].start_time()
    }

    /// No round may confirm at or after this time.
    pub fn horizon(&self) -> f64 {
        self.profiles[0].end_time()
    }

    pub fn bin_count(&self) -> usize {
        (((self.horizon() - self.start_time()) / self.bin_width) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn bin_index(&self, t: f64) -> usize {
        let i = ((t - self.start_time()) / self.bin_width).floor().max(0.0) as usize;
        i.min(self.bin_count() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let legs = self.profiles.len();
        if !(1..=2).contains(&legs) {
            return Err(Error::Config(format!("expected one or two profiles, got {legs}")));
        }
        if self.link_params.len() != legs {
            return Err(Error::Config(format!(
                "{} link parameter sets for {legs} profile(s)",
                self.link_params.len()
            )));
        }
        for (p, params) in self.profiles.iter().zip(&self.link_params) {
            p.validate()?;
            params.validate()?;
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::Config("bin width must be > 0".into()));
        }
        if matches!(self.pair_cutoff, Some(c) if !(c >= 0.0)) {
            return Err(Error::Config("pair cutoff must be >= 0 when set".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::Config("buffer capacity must be >= 1 when set".into()));
        }
        match (legs, self.policy) {
            (1, AllocationPolicy::Single) => Ok(()),
            (1, _) => Err(Error::Config("a single-leg run needs the `single` policy".into())),
            (2, AllocationPolicy::Single) => Err(Error::Config(
                "a dual-leg run needs a `static` or `dynamic_int` policy".into(),
            )),
            (_, policy) => {
                let (pa, pb) = (&self.profiles[0], &self.profiles[1]);
                pa.check_aligned(pb)?;
                let m_s = self.link_params[0].m_sat;
                if self.link_params[1].m_sat != m_s {
                    return Err(Error::Config(format!(
                        "legs disagree on satellite memory ({m_s} vs {})",
                        self.link_params[1].m_sat
                    )));
                }
                match policy {
                    AllocationPolicy::Static { m_a, m_b } if m_a + m_b != m_s => Err(Error::Config(
                        format!("static split ({m_a}, {m_b}) does not sum to m_S = {m_s}"),
                    )),
                    AllocationPolicy::DynamicInt if m_s < 2 => {
                        Err(Error::Config("dynamic allocation needs m_S >= 2".into()))
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhotonOutcome {
    Lost,
    DriftedOut,
    Latched,
}

impl PhotonOutcome {
    pub fn code(self) -> char {
        match self {
            PhotonOutcome::Lost => 'x',
            PhotonOutcome::DriftedOut => 'd',
            PhotonOutcome::Latched => 'L',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'x' => Some(PhotonOutcome::Lost),
            'd' => Some(PhotonOutcome::DriftedOut),
            'L' => Some(PhotonOutcome::Latched),
            _ => None,
        }
    }
}

mod outcome_codes {
    use super::PhotonOutcome;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[PhotonOutcome], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.iter().map(|o| o.code()).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PhotonOutcome>, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| PhotonOutcome::from_code(c).ok_or_else(|| D::Error::custom(format!("bad outcome code `{c}`"))))
            .collect()
    }
}

/// One protocol round on one leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub leg: usize,
    pub start_time: f64,
    pub train_length: u32,
    pub v_r_at_start: f64,
    pub eta: f64,
    pub t_rt: f64,
    /// `start + (N−1)·T_em + t_rt`.
    pub confirm_time: f64,
    /// Per-photon results in emission order; empty for schedule-only runs.
    #[serde(with = "outcome_codes")]
    pub outcomes: Vec<PhotonOutcome>,
}

impl Round {
    pub fn latched(&self) -> u64 {
        self.outcomes.iter().filter(|o| **o == PhotonOutcome::Latched).count() as u64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    /// Confirmed pairs per leg (leg B stays 0 for single runs).
    pub legs: [u64; 2],
    pub end_to_end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub engine_version: String,
    pub seed: u64,
    pub start_time: f64,
    pub bin_width: f64,
    pub bins: Vec<BinCounts>,
    pub leg_totals: [u64; 2],
    pub end_to_end_total: u64,
    /// Pairs discarded because a bounded buffer was full.
    pub dropped: [u64; 2],
    /// Pairs discarded after waiting longer than the pair cutoff.
    pub expired: [u64; 2],
    /// Pairs still buffered at the end of the run.
    pub leftover: [u64; 2],
    pub rounds: Vec<Round>,
}

impl SimResult {
    fn empty(config: &SimConfig) -> Self {
        Self {
            engine_version: ENGINE_VERSION.to_string(),
            seed: config.rng_seed,
            start_time: config.start_time(),
            bin_width: config.bin_width,
            bins: vec![BinCounts::default(); config.bin_count()],
            leg_totals: [0; 2],
            end_to_end_total: 0,
            dropped: [0; 2],
            expired: [0; 2],
            leftover: [0; 2],
            rounds: Vec::new(),
        }
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.bin_width
    }

    pub fn leg_counts(&self, leg: usize) -> Vec<u64> {
        self.bins.iter().map(|b| b.legs[leg]).collect()
    }

    pub fn end_to_end_counts(&self) -> Vec<u64> {
        self.bins.iter().map(|b| b.end_to_end).collect()
    }

    pub fn round_log(&self) -> RoundLog {
        RoundLog {
            engine_version: self.engine_version.clone(),
            seed: self.seed,
            rounds: self.rounds.clone(),
        }
    }

    /// Totals plus an echo of the configuration, for provenance.
    pub fn summary(&self, config: &SimConfig) -> serde_json::Value {
        serde_json::json!({
            "engine_version": self.engine_version,
            "seed": self.seed,
            "totals": {
                "pairs_legA": self.leg_totals[0],
                "pairs_legB": self.leg_totals[1],
                "pairs_end_to_end": self.end_to_end_total,
                "dropped": self.dropped,
                "expired": self.expired,
                "leftover_buffered": self.leftover,
                "rounds": self.rounds.len(),
            },
            "config": {
                "stations": config.profiles.iter().map(|p| p.station.clone()).collect::<Vec<_>>(),
                "epoch": config.profiles[0].epoch,
                "sample_step": config.profiles[0].sample_step,
                "samples": config.profiles[0].len(),
                "link_params": config.link_params,
                "policy": config.policy,
                "drift": config.drift,
                "bin_width": config.bin_width,
                "buffer_capacity": config.buffer_capacity,
                "pair_cutoff_s": config.pair_cutoff,
            },
        })
    }
}

/// Runs a one-leg simulation.
pub fn run_single(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if config.legs() != 1 {
        return Err(Error::Config("run_single needs exactly one profile".into()));
    }
    Ok(engine::Engine::new(config, true).run())
}

/// Runs a two-leg simulation with onboard swapping.
pub fn run_dual(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if config.legs() != 2 {
        return Err(Error::Config("run_dual needs exactly two profiles".into()));
    }
    Ok(engine::Engine::new(config, true).run())
}

/// Dispatches on the number of legs.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    match config.legs() {
        1 => run_single(config),
        _ => run_dual(config),
    }
}

/// The deterministic round schedule of `config` (no random draws; outcome
/// lists are empty). Scheduling never depends on photon outcomes.
pub fn schedule(config: &SimConfig) -> Result<Vec<Round>> {
    config.validate()?;
    Ok(engine::Engine::new(config, false).run().rounds)
}

/// Rebuilds a result from a recorded round log without drawing any random
/// numbers.
pub fn replay(config: &SimConfig, log: &RoundLog) -> Result<SimResult> {
    if log.engine_version != ENGINE_VERSION {
        return Err(Error::Replay(format!(
            "log written by `{}`, this engine is `{ENGINE_VERSION}`",
            log.engine_version
        )));
    }
    if log.seed != config.rng_seed {
        return Err(Error::Replay(format!(
            "log seed {} does not match configured seed {}",
            log.seed, config.rng_seed
        )));
    }
    let planned = schedule(config)?;
    if planned.len() != log.rounds.len() {
        return Err(Error::Replay(format!(
            "log has {} rounds, configuration schedules {}",
            log.rounds.len(),
            planned.len()
        )));
    }
    for (i, (p, r)) in planned.iter().zip(&log.rounds).enumerate() {
        let same = p.leg == r.leg
            && p.start_time == r.start_time
            && p.train_length == r.train_length
            && p.confirm_time == r.confirm_time
            && r.outcomes.len() == r.train_length as usize;
        if !same {
            return Err(Error::Replay(format!("round {i} does not match the configured schedule")));
        }
    }
    Ok(engine::accumulate(config, log.rounds.clone()))
}
