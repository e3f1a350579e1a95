//! Statistical cross-check of simulated counts against the rate model.
//!
//! Every round contributes independent Bernoulli trials, one per photon that
//! can still be latched, each succeeding with probability `q = η·p_bsm`.
//! Summing over the rounds confirmed in a bin gives the bin's exact mean and
//! binomial variance. A run passes when at least 90 % of the evaluated bins
//! fall within ±2σ and the run total is within ±3σ of its expectation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::sim_engine::{latch_eligible, schedule, SimConfig, SimResult};
use crate::{Error, Result};

pub const BAND_Z: f64 = 2.0;
pub const MIN_FRACTION_WITHIN: f64 = 0.9;
pub const MAX_TOTAL_Z: f64 = 3.0;

pub const REPORT_CSV_HEADER: &str = "bin_start_s,mu,sigma,count,z";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinMoments {
    pub bin_start: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Expected count and its standard deviation for every bin of leg `leg`,
/// following the simulator's own round schedule.
pub fn predict_bin_moments(config: &SimConfig, leg: usize) -> Result<Vec<BinMoments>> {
    if leg >= config.legs() {
        return Err(Error::Config(format!("leg {leg} does not exist")));
    }
    let rounds = schedule(config)?;
    let params = &config.link_params[leg];
    let mut mu = vec![0.0; config.bin_count()];
    let mut var = vec![0.0; config.bin_count()];
    for r in rounds.iter().filter(|r| r.leg == leg) {
        let n_eff = f64::from(latch_eligible(r.train_length, r.v_r_at_start, params, config.drift));
        let q = r.eta * params.p_bsm;
        let bin = config.bin_index(r.confirm_time);
        mu[bin] += n_eff * q;
        var[bin] += n_eff * q * (1.0 - q);
    }
    Ok(mu
        .into_iter()
        .zip(var)
        .enumerate()
        .map(|(i, (mu, var))| BinMoments {
            bin_start: config.start_time() + i as f64 * config.bin_width,
            mu,
            sigma: var.max(0.0).sqrt(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub bin_start: f64,
    pub mu: f64,
    pub sigma: f64,
    pub count: u64,
    /// `(count − µ)/σ`; undefined when σ = 0.
    pub z: Option<f64>,
    /// False for bins with µ = 0 and no counts.
    pub evaluated: bool,
    pub within_band: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub bins_evaluated: usize,
    pub fraction_within_band: f64,
    pub total_count: u64,
    pub total_mu: f64,
    pub total_sigma: f64,
    pub z_total: Option<f64>,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub bins: Vec<BinReport>,
    pub summary: ValidationSummary,
}

fn matches_exactly(count: f64, mu: f64) -> bool {
    (count - mu).abs() <= 1e-9 * mu.max(1.0)
}

fn score(bin_start: f64, count: u64, m: &BinMoments) -> BinReport {
    let evaluated = !(m.mu == 0.0 && count == 0);
    let c = count as f64;
    let z = (m.sigma > 0.0).then(|| (c - m.mu) / m.sigma);
    let within_band = match z {
        Some(z) => z.abs() <= BAND_Z,
        None => matches_exactly(c, m.mu),
    };
    BinReport {
        bin_start,
        mu: m.mu,
        sigma: m.sigma,
        count,
        z,
        evaluated,
        within_band,
    }
}

fn summarize(bins: Vec<BinReport>) -> ValidationReport {
    let evaluated: Vec<&BinReport> = bins.iter().filter(|b| b.evaluated).collect();
    let fraction = if evaluated.is_empty() {
        1.0
    } else {
        evaluated.iter().filter(|b| b.within_band).count() as f64 / evaluated.len() as f64
    };
    let total_count: u64 = bins.iter().map(|b| b.count).sum();
    let total_mu: f64 = bins.iter().map(|b| b.mu).sum();
    let total_sigma = bins.iter().map(|b| b.sigma * b.sigma).sum::<f64>().sqrt();
    let z_total = (total_sigma > 0.0).then(|| (total_count as f64 - total_mu) / total_sigma);
    let total_ok = match z_total {
        Some(z) => z.abs() <= MAX_TOTAL_Z,
        None => matches_exactly(total_count as f64, total_mu),
    };
    ValidationReport {
        summary: ValidationSummary {
            bins_evaluated: evaluated.len(),
            fraction_within_band: fraction,
            total_count,
            total_mu,
            total_sigma,
            z_total,
            verdict: fraction >= MIN_FRACTION_WITHIN && total_ok,
        },
        bins,
    }
}

fn check_grid(bin_starts: &[f64], counts: &[u64], moments: &[BinMoments]) -> Result<()> {
    if bin_starts.len() != moments.len() || counts.len() != moments.len() {
        return Err(Error::Alignment(format!(
            "{} simulated bins vs {} predicted bins",
            counts.len(),
            moments.len()
        )));
    }
    if let Some(i) = (0..moments.len()).find(|&i| (bin_starts[i] - moments[i].bin_start).abs() > 1e-6) {
        return Err(Error::Alignment(format!(
            "bin {i} starts at {} in the simulation but {} in the prediction",
            bin_starts[i], moments[i].bin_start
        )));
    }
    Ok(())
}

/// Scores one series of per-bin counts.
pub fn compare_counts(bin_starts: &[f64], counts: &[u64], moments: &[BinMoments]) -> Result<ValidationReport> {
    check_grid(bin_starts, counts, moments)?;
    Ok(summarize(
        counts
            .iter()
            .zip(moments)
            .map(|(&c, m)| score(m.bin_start, c, m))
            .collect(),
    ))
}

/// Scores leg `leg` of a simulation result.
pub fn compare(sim: &SimResult, leg: usize, moments: &[BinMoments]) -> Result<ValidationReport> {
    let starts: Vec<f64> = (0..sim.bins.len()).map(|i| sim.bin_start(i)).collect();
    compare_counts(&starts, &sim.leg_counts(leg), moments)
}

/// Scores several independent runs of the same configuration at once: bins
/// of all runs are pooled and the total is compared against the summed
/// expectation.
pub fn compare_pooled(runs: &[(Vec<f64>, Vec<u64>)], moments: &[BinMoments]) -> Result<ValidationReport> {
    let mut bins = Vec::with_capacity(runs.len() * moments.len());
    for (starts, counts) in runs {
        check_grid(starts, counts, moments)?;
        bins.extend(counts.iter().zip(moments).map(|(&c, m)| score(m.bin_start, c, m)));
    }
    Ok(summarize(bins))
}

impl ValidationReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{REPORT_CSV_HEADER}")?;
        for b in &self.bins {
            let z = b.z.map(|z| z.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", b.bin_start, b.mu, b.sigma, b.count, z)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(mu: f64, sigma: f64) -> BinMoments {
        BinMoments {
            bin_start: 0.0,
            mu,
            sigma,
        }
    }

    #[test]
    fn empty_bins_are_excluded() {
        let moments = vec![m(0.0, 0.0); 5];
        let r = compare_counts(&[0.0; 5], &[0; 5], &moments).unwrap();
        assert_eq!(r.summary.bins_evaluated, 0);
        assert!(r.summary.verdict);
    }

    #[test]
    fn deterministic_bins_need_exact_counts() {
        let r = compare_counts(&[0.0], &[7], &[m(7.0, 0.0)]).unwrap();
        assert!(r.summary.verdict);
        assert_eq!(r.bins[0].z, None);
        let r = compare_counts(&[0.0], &[6], &[m(7.0, 0.0)]).unwrap();
        assert!(!r.summary.verdict);
    }

    #[test]
    fn z_scores() {
        let r = compare_counts(&[0.0, 0.0], &[14, 10], &[m(10.0, 2.0), m(10.0, 2.0)]).unwrap();
        assert_eq!(r.bins[0].z, Some(2.0));
        assert!(r.bins[0].within_band);
        assert_eq!(r.summary.z_total, Some(4.0 / 8f64.sqrt()));
        let r = compare_counts(&[0.0], &[15], &[m(10.0, 2.0)]).unwrap();
        assert!(!r.bins[0].within_band);
        assert!(!r.summary.verdict);
    }

    #[test]
    fn grid_mismatch() {
        assert!(matches!(
            compare_counts(&[0.0], &[1, 2], &[m(1.0, 1.0)]),
            Err(Error::Alignment(_))
        ));
        let moved = BinMoments {
            bin_start: 1.0,
            ..m(1.0, 1.0)
        };
        assert!(matches!(compare_counts(&[0.0], &[1], &[moved]), Err(Error::Alignment(_))));
    }
}
