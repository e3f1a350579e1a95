//! Declarative experiment description, read from TOML.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::ValueEnum;
use orbilink::analytics::LinkParams;
use orbilink::pass_model::{
    aim_orbit, propagate_pass, read_profile, GroundStation, OpticalParams, PassProfile, SatelliteConfig,
};
use orbilink::sim_engine::{AllocationPolicy, DriftModel, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub epoch: DateTime<Utc>,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "one")]
    pub step_s: f64,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub satellite: SatelliteSpec,
    #[serde(default)]
    pub optics: OpticsSpec,
    #[serde(default)]
    pub link: LinkSpec,
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub report: ReportSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub altitude_m: f64,
    pub inclination_deg: f64,
    /// Either both orbital angles, or `aim`.
    #[serde(default)]
    pub raan_deg: Option<f64>,
    #[serde(default)]
    pub phase_at_epoch_deg: Option<f64>,
    #[serde(default)]
    pub aim: Option<AimSpec>,
    #[serde(default = "default_tx")]
    pub tx_telescope_diameter_m: f64,
    pub memory_slots: u32,
}

/// Places the orbit so the ground track crosses a point at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AimSpec {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub t_s: f64,
    #[serde(default = "yes")]
    pub ascending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsSpec {
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    #[serde(default = "one")]
    pub zenith_transmission: f64,
    #[serde(default = "one")]
    pub system_efficiency: f64,
}

impl Default for OpticsSpec {
    fn default() -> Self {
        Self {
            wavelength_m: default_wavelength(),
            zenith_transmission: 1.0,
            system_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default = "default_emission_period")]
    pub emission_period_s: f64,
    #[serde(default = "default_window")]
    pub acceptance_window_s: f64,
    #[serde(default = "default_p_bsm")]
    pub p_bsm: f64,
    /// Defaults to the satellite's memory size.
    #[serde(default)]
    pub ground_memory_slots: Option<u32>,
    #[serde(default)]
    pub processing_delay_s: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            emission_period_s: default_emission_period(),
            acceptance_window_s: default_window(),
            p_bsm: default_p_bsm(),
            ground_memory_slots: None,
            processing_delay_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
    #[serde(default = "one")]
    pub rx_telescope_diameter_m: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Single,
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default)]
    pub policy: Option<Policy>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default = "default_drift")]
    pub drift: Drift,
    #[serde(default = "one")]
    pub bin_width_s: f64,
    /// Fixed split for the static policy; the best static split otherwise.
    #[serde(default)]
    pub static_split: Option<[u32; 2]>,
    /// Storage limit for pairs awaiting a swap; `inf` keeps them forever.
    #[serde(default = "default_cutoff")]
    pub pair_cutoff_s: f64,
    #[serde(default)]
    pub buffer_capacity: Option<u64>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            policy: None,
            seeds: default_seeds(),
            first_seed: 0,
            drift: Drift::On,
            bin_width_s: 1.0,
            static_split: None,
            pair_cutoff_s: default_cutoff(),
            buffer_capacity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    #[serde(default = "default_memories")]
    pub memories: Vec<u32>,
}

impl Default for ReportSpec {
    fn default() -> Self {
        Self {
            memories: default_memories(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_duration() -> f64 {
    600.0
}
fn default_tx() -> f64 {
    0.1
}
fn default_wavelength() -> f64 {
    1550e-9
}
fn default_emission_period() -> f64 {
    1e-6
}
fn default_window() -> f64 {
    1.5e-9
}
fn default_p_bsm() -> f64 {
    0.5
}
fn default_min_elevation() -> f64 {
    GroundStation::DEFAULT_MIN_ELEVATION
}
fn default_seeds() -> u64 {
    1
}
fn default_drift() -> Drift {
    Drift::On
}
fn default_cutoff() -> f64 {
    orbilink::sim_engine::DEFAULT_PAIR_CUTOFF
}
fn default_memories() -> Vec<u32> {
    vec![10, 50, 100]
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seeds: Option<u64>,
    pub policy: Option<Policy>,
    pub m_sat: Option<u32>,
    pub drift: Option<Drift>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(n) = o.seeds {
            self.simulation.seeds = n;
        }
        if let Some(p) = o.policy {
            self.simulation.policy = Some(p);
        }
        if let Some(m) = o.m_sat {
            self.satellite.memory_slots = m;
        }
        if let Some(d) = o.drift {
            self.simulation.drift = d;
        }
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.step_s > 0.0) {
            return usage(format!("step_s must be > 0, got {}", self.step_s));
        }
        if !(self.duration_s > 0.0) || self.duration_s / self.step_s < 2.0 {
            return usage(format!(
                "duration_s ({}) must cover at least two steps of {} s",
                self.duration_s, self.step_s
            ));
        }
        if self.stations.is_empty() || self.stations.len() > 2 {
            return usage(format!("expected one or two stations, got {}", self.stations.len()));
        }
        if self.simulation.seeds == 0 {
            return usage("seeds must be >= 1".into());
        }
        if !(self.simulation.pair_cutoff_s >= 0.0) {
            return usage("pair_cutoff_s must be >= 0 (inf disables it)".into());
        }
        let s = &self.satellite;
        match (s.raan_deg, s.phase_at_epoch_deg, &s.aim) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            _ => return usage("satellite needs either raan_deg and phase_at_epoch_deg, or aim".into()),
        }
        match (self.policy(), self.stations.len()) {
            (Policy::Static | Policy::Dynamic, 1) => {
                return usage(format!("policy {:?} needs two stations", self.policy()));
            }
            (Policy::Single, 2) => log::warn!("single policy: only station `{}` is simulated", self.stations[0].name),
            _ => {}
        }
        if self.report.memories.iter().any(|&m| m < 2) {
            return usage("report memories must be >= 2".into());
        }
        self.satellite()?;
        for st in self.ground_stations() {
            st.validate()?;
        }
        self.optics().validate()?;
        self.link_params().validate()?;
        Ok(())
    }

    pub fn policy(&self) -> Policy {
        self.simulation.policy.unwrap_or(if self.stations.len() == 2 {
            Policy::Dynamic
        } else {
            Policy::Single
        })
    }

    pub fn satellite(&self) -> Result<SatelliteConfig, CliError> {
        let s = &self.satellite;
        let (raan, phase_at_epoch) = match (&s.aim, s.raan_deg, s.phase_at_epoch_deg) {
            (Some(a), _, _) => aim_orbit(
                s.altitude_m,
                s.inclination_deg,
                &self.epoch,
                a.t_s,
                a.latitude_deg,
                a.longitude_deg,
                a.ascending,
            )?,
            (None, Some(r), Some(p)) => (r, p),
            _ => return Err(CliError::Usage("incomplete satellite orbit".into())),
        };
        let sat = SatelliteConfig {
            orbit_altitude: s.altitude_m,
            orbit_inclination: s.inclination_deg,
            raan,
            phase_at_epoch,
            tx_telescope_diameter: s.tx_telescope_diameter_m,
            memory_slots: s.memory_slots,
        };
        sat.validate()?;
        Ok(sat)
    }

    pub fn ground_stations(&self) -> Vec<GroundStation> {
        self.stations
            .iter()
            .map(|s| GroundStation {
                name: s.name.clone(),
                latitude: s.latitude_deg,
                longitude: s.longitude_deg,
                altitude: s.altitude_m,
                rx_telescope_diameter: s.rx_telescope_diameter_m,
                min_elevation: s.min_elevation_deg,
            })
            .collect()
    }

    pub fn optics(&self) -> OpticalParams {
        OpticalParams {
            wavelength: self.optics.wavelength_m,
            zenith_atmospheric_transmission: self.optics.zenith_transmission,
            system_efficiency: self.optics.system_efficiency,
        }
    }

    /// Link constants for a satellite with `m_sat` slots.
    pub fn link_params_for(&self, m_sat: u32) -> LinkParams {
        LinkParams {
            emission_period: self.link.emission_period_s,
            acceptance_window: self.link.acceptance_window_s,
            p_bsm: self.link.p_bsm,
            m_sat,
            m_ground: self.link.ground_memory_slots.unwrap_or(m_sat),
            processing_delay: self.link.processing_delay_s,
            ..LinkParams::default()
        }
    }

    pub fn link_params(&self) -> LinkParams {
        self.link_params_for(self.satellite.memory_slots)
    }

    /// Pass profiles: ingested from `files` when given, propagated otherwise.
    pub fn profiles(&self, files: &[PathBuf]) -> Result<Vec<PassProfile>, CliError> {
        if !files.is_empty() {
            if files.len() != self.stations.len() {
                return Err(CliError::Usage(format!(
                    "{} profile file(s) given for {} station(s)",
                    files.len(),
                    self.stations.len()
                )));
            }
            return files
                .iter()
                .map(|f| read_profile(f).map_err(|e| CliError::Data(format!("{}: {e}", f.display()))))
                .collect();
        }
        let sat = self.satellite()?;
        let optics = self.optics();
        self.ground_stations()
            .iter()
            .map(|st| {
                let p = propagate_pass(&sat, st, &optics, self.epoch, self.duration_s, self.step_s)?;
                if !p.any_visible() {
                    log::warn!("station `{}` never sees the satellite above {}°", st.name, st.min_elevation);
                }
                Ok(p)
            })
            .collect()
    }

    pub fn drift(&self) -> DriftModel {
        match self.simulation.drift {
            Drift::On => DriftModel::On,
            Drift::Off => DriftModel::Off,
        }
    }

    /// Simulation configuration for the configured policy and memory `m_sat`.
    pub fn sim_config(&self, profiles: &[PassProfile], m_sat: u32, seed: u64) -> Result<SimConfig, CliError> {
        self.sim_config_for(profiles, m_sat, self.policy(), seed)
    }

    pub fn sim_config_for(
        &self,
        profiles: &[PassProfile],
        m_sat: u32,
        policy: Policy,
        seed: u64,
    ) -> Result<SimConfig, CliError> {
        let params = self.link_params_for(m_sat);
        let mut cfg = match policy {
            Policy::Single => SimConfig::single(profiles[0].clone(), params, seed),
            policy => {
                let policy = match policy {
                    Policy::Dynamic => AllocationPolicy::DynamicInt,
                    _ => {
                        let (m_a, m_b) = self.static_split(profiles, m_sat)?;
                        AllocationPolicy::Static { m_a, m_b }
                    }
                };
                SimConfig::dual([profiles[0].clone(), profiles[1].clone()], [params; 2], policy, seed)
            }
        };
        cfg.drift = self.drift();
        cfg.bin_width = self.simulation.bin_width_s;
        cfg.buffer_capacity = self.simulation.buffer_capacity;
        cfg.pair_cutoff = self.simulation.pair_cutoff_s.is_finite().then_some(self.simulation.pair_cutoff_s);
        if cfg.legs() == 1 {
            cfg.pair_cutoff = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn static_split(&self, profiles: &[PassProfile], m_sat: u32) -> Result<(u32, u32), CliError> {
        match self.simulation.static_split {
            Some([a, b]) if m_sat == self.satellite.memory_slots => Ok((a, b)),
            _ => {
                let params = self.link_params_for(m_sat);
                Ok(orbilink::analytics::best_static_split(&profiles[0], &params, &profiles[1], &params)?)
            }
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.simulation.seeds).map(|i| self.simulation.first_seed + i)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("orbilink-out"))
    }
}
