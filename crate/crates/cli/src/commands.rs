use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use orbilink::analytics::{
    differential_shift, dual_rate_series, integrated_pairs, max_train_length, single_rate_series,
    train_length_bound, AllocationResult, SingleRateModel, SplitPolicy,
};
use orbilink::pass_model::{write_profile, PassProfile};
use orbilink::sim_engine::{run, write_round_log, write_sim_csv, read_sim_csv, SimConfig, SimResult};
use orbilink::validation::{compare_counts, compare_pooled, predict_bin_moments, BinMoments, ValidationSummary};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{opt, write_atomic, write_json, Table};
use crate::spec::{ExperimentSpec, Policy};
use crate::CliError;

/// Radial velocity at which the published train-length figure is quoted, m/s.
const REFERENCE_RADIAL_VELOCITY: f64 = 6998.0;
const QUOTED_TRAIN_LENGTH: u64 = 67;

pub struct Context {
    pub spec: ExperimentSpec,
    pub profiles: Vec<PassProfile>,
    pub out: PathBuf,
}

impl Context {
    pub fn new(spec: ExperimentSpec, profile_files: Vec<PathBuf>) -> Result<Self, CliError> {
        let profiles = spec.profiles(&profile_files)?;
        if profiles.len() == 2 {
            profiles[0].check_aligned(&profiles[1])?;
        }
        let out = spec.output_dir();
        write_json(&out.join("resolved_spec.json"), &spec)?;
        Ok(Self { spec, profiles, out })
    }

    fn m_sat(&self) -> u32 {
        self.spec.satellite.memory_slots
    }

    fn name(&self, i: usize) -> &str {
        &self.profiles[i].station
    }

    fn dual(&self) -> Result<(&PassProfile, &PassProfile), CliError> {
        match self.profiles.as_slice() {
            [a, b] => Ok((a, b)),
            _ => Err(CliError::Usage("this command needs two stations".into())),
        }
    }
}

pub fn gen_pass(ctx: &Context, station: Option<&str>) -> Result<(), CliError> {
    let mut written = 0;
    for p in &ctx.profiles {
        if station.is_some_and(|s| s != p.station) {
            continue;
        }
        let path = ctx.out.join(format!("pass_{}.csv", p.station));
        write_profile(p, &path)?;
        println!("{}", path.display());
        written += 1;
    }
    if written == 0 {
        return Err(CliError::Usage(format!("no station named `{}`", station.unwrap_or_default())));
    }
    Ok(())
}

fn save_rates(path: &Path, series: &[orbilink::analytics::RatePoint], split: bool) -> Result<(), CliError> {
    let mut t = if split {
        Table::new(&["t_s", "rate_pairs_per_s", "m_A", "m_B"])
    } else {
        Table::new(&["t_s", "rate_pairs_per_s"])
    };
    for p in series {
        let mut row = vec![p.t.to_string(), p.rate.to_string()];
        if split {
            row.push(opt(p.m_a));
            row.push(opt(p.m_b));
        }
        t.row(row);
    }
    t.save(path)
}

pub fn rate(ctx: &Context) -> Result<(), CliError> {
    let params = ctx.spec.link_params();
    for (i, p) in ctx.profiles.iter().enumerate() {
        for (model, suffix) in [(SingleRateModel::Corrected, ""), (SingleRateModel::Uncorrected, "_uncorrected")] {
            let series = single_rate_series(p, &params, model)?;
            save_rates(&ctx.out.join(format!("rate_{}{suffix}.csv", ctx.name(i))), &series, false)?;
        }
    }
    if let Ok((a, b)) = ctx.dual() {
        let (m_a, m_b) = ctx.spec.static_split(&ctx.profiles, ctx.m_sat())?;
        for (policy, name) in [
            (SplitPolicy::RealDynamic, "dual_dynamic_real"),
            (SplitPolicy::IntDynamic, "dual_dynamic_int"),
            (SplitPolicy::Static { m_a, m_b }, "dual_static"),
        ] {
            let series = dual_rate_series(a, &params, b, &params, policy)?;
            info!("{name}: {:.1} pairs", integrated_pairs(&series, a.sample_step));
            save_rates(&ctx.out.join(format!("rate_{name}.csv")), &series, true)?;
        }
    }
    Ok(())
}

pub fn allocate(ctx: &Context) -> Result<(), CliError> {
    let (a, b) = ctx.dual()?;
    let params = ctx.spec.link_params();
    let result = AllocationResult::compute(a, &params, b, &params)?;
    write_json(&ctx.out.join("allocation.json"), &result)?;
    println!("static split: {} {}", result.static_split.0, result.static_split.1);
    Ok(())
}

fn sim_dir(ctx: &Context) -> PathBuf {
    ctx.out.join("sim")
}

fn save_run(dir: &Path, cfg: &SimConfig, sim: &SimResult, round_log: bool) -> Result<(), CliError> {
    let stem = format!("seed_{}", cfg.rng_seed);
    let mut csv = Vec::new();
    write_sim_csv(sim, &mut csv)?;
    write_atomic(&dir.join(format!("{stem}.csv")), &csv)?;
    write_json(&dir.join(format!("{stem}.json")), &sim.summary(cfg))?;
    if round_log {
        let mut log = Vec::new();
        write_round_log(&sim.round_log(), &mut log)?;
        write_atomic(&dir.join(format!("{stem}.rounds.ndjson")), &log)?;
    }
    Ok(())
}

pub fn simulate(ctx: &Context, round_log: bool) -> Result<(), CliError> {
    let base = ctx.spec.sim_config(&ctx.profiles, ctx.m_sat(), 0)?;
    let dir = sim_dir(ctx);
    let seeds: Vec<u64> = ctx.spec.seeds().collect();
    let totals = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = base.with_seed(seed);
            let sim = run(&cfg)?;
            save_run(&dir, &cfg, &sim, round_log)?;
            Ok((seed, sim.leg_totals, sim.end_to_end_total))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let runs: Vec<_> = totals
        .iter()
        .map(|(seed, legs, e2e)| json!({ "seed": seed, "leg_totals": legs, "end_to_end_total": e2e }))
        .collect();
    write_json(&dir.join("summary.json"), &json!({ "policy": ctx.spec.policy(), "runs": runs }))?;
    for (seed, legs, e2e) in &totals {
        println!("seed {seed}: legs {legs:?} end-to-end {e2e}");
    }
    Ok(())
}

const LEG_NAMES: [&str; 2] = ["A", "B"];

pub fn validate(ctx: &Context) -> Result<bool, CliError> {
    let cfg = ctx.spec.sim_config(&ctx.profiles, ctx.m_sat(), 0)?;
    let dir = sim_dir(ctx);
    let mut sims = Vec::new();
    for seed in ctx.spec.seeds() {
        let path = dir.join(format!("seed_{seed}.csv"));
        let file = std::fs::File::open(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let rows = read_sim_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        sims.push((seed, rows));
    }
    let mut verdict = true;
    let mut legs = BTreeMap::new();
    for (leg, leg_name) in LEG_NAMES.iter().enumerate().take(cfg.legs()) {
        let moments = predict_bin_moments(&cfg, leg)?;
        let mut runs = Vec::new();
        let mut per_seed: Vec<(u64, ValidationSummary)> = Vec::new();
        for (seed, rows) in &sims {
            let starts: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let counts: Vec<u64> = rows.iter().map(|r| r.1[leg]).collect();
            let report = compare_counts(&starts, &counts, &moments)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            write_atomic(&ctx.out.join(format!("validation/seed_{seed}_leg{leg_name}.csv")), &csv)?;
            per_seed.push((*seed, report.summary));
            runs.push((starts, counts));
        }
        let pooled = compare_pooled(&runs, &moments)?.summary;
        println!(
            "leg {}: {} seed(s), {:.3} of {} bins within 2σ, z_total {} -> {}",
            leg_name,
            runs.len(),
            pooled.fraction_within_band,
            pooled.bins_evaluated,
            pooled.z_total.map_or("n/a".into(), |z| format!("{z:+.2}")),
            if pooled.verdict { "pass" } else { "FAIL" }
        );
        verdict &= pooled.verdict;
        let seeds: Vec<_> = per_seed.iter().map(|(s, v)| json!({ "seed": s, "summary": v })).collect();
        legs.insert(*leg_name, json!({ "pooled": pooled, "per_seed": seeds }));
    }
    write_json(&ctx.out.join("validation/summary.json"), &json!({ "verdict": verdict, "legs": legs }))?;
    Ok(verdict)
}

/// Per-bin mean over seeds of `pick(result)`.
fn mean_counts(configs: &[SimConfig], pick: fn(&SimResult) -> Vec<u64>) -> Result<Vec<f64>, CliError> {
    let runs = configs
        .par_iter()
        .map(|c| run(c).map(|r| pick(&r)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = runs.len() as f64;
    let mut mean = vec![0.0; runs.first().map_or(0, Vec::len)];
    for r in &runs {
        for (m, &c) in mean.iter_mut().zip(r) {
            *m += c as f64 / n;
        }
    }
    Ok(mean)
}

fn cumulative(xs: impl IntoIterator<Item = f64>) -> Vec<f64> {
    xs.into_iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn train_note(ctx: &Context) -> String {
    let params = ctx.spec.link_params();
    let n = max_train_length(REFERENCE_RADIAL_VELOCITY, &params);
    let bound = train_length_bound(REFERENCE_RADIAL_VELOCITY, &params);
    let pass_max = ctx.profiles[0]
        .samples()
        .iter()
        .filter(|s| s.visible)
        .map(|s| s.radial_velocity.abs())
        .fold(0.0, f64::max);
    format!(
        "train length bound at |v_r| = {REFERENCE_RADIAL_VELOCITY} m/s, w_i = {:e} s, T_em = {:e} s\n\
         computed: {} (real-valued bound {bound:.4})\n\
         published: {QUOTED_TRAIN_LENGTH}\n\
         note: floor(w_i*c/(|v_r|*T_em)) gives the computed value; the published figure is not \
         reproduced by this formula. The simulator keeps photon k while k*|dt| <= w_i, so the first \
         photon always counts and one more photon than the floored bound is latchable.\n\
         largest |v_r| while `{}` is visible: {pass_max:.1} m/s, bound there {:.4}\n",
        params.acceptance_window,
        params.emission_period,
        n.bounded().map_or("unbounded".into(), |k| k.to_string()),
        ctx.profiles[0].station,
        train_length_bound(pass_max, &params),
    )
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let dir = ctx.out.join("report");
    let step = ctx.profiles[0].sample_step;
    if (ctx.spec.simulation.bin_width_s - step).abs() > 1e-9 {
        warn!("report bins simulated counts at the sample step ({step} s), not bin_width_s");
    }
    let seeds: Vec<u64> = ctx.spec.seeds().collect();
    let times: Vec<f64> = ctx.profiles[0].samples().iter().map(|s| s.t).collect();

    let mut link = Table::new(
        &std::iter::once("t_s".to_string())
            .chain(ctx.profiles.iter().flat_map(|p| {
                ["elevation_deg", "distance_m", "radial_velocity_mps", "eta"].map(|c| format!("{c}_{}", p.station))
            }))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for p in &ctx.profiles {
            let s = &p.samples()[i];
            row.extend([s.elevation, s.distance, s.radial_velocity, s.eta].map(|x| x.to_string()));
        }
        link.row(row);
    }
    link.save(&dir.join("fig1_link.csv"))?;

    let params = ctx.spec.link_params();
    let pass_max = ctx.profiles[0]
        .samples()
        .iter()
        .filter(|s| s.visible)
        .map(|s| s.radial_velocity.abs())
        .fold(0.0, f64::max);
    let longest = ctx.spec.report.memories.iter().copied().chain([ctx.m_sat()]).max().unwrap_or(1);
    let mut train = Table::new(&["photon", "offset_ns_reference", "in_window_reference", "offset_ns_pass", "in_window_pass"]);
    for k in 0..longest {
        let mut row = vec![k.to_string()];
        for v in [REFERENCE_RADIAL_VELOCITY, pass_max] {
            let offset = f64::from(k) * differential_shift(v, &params).abs();
            row.push((offset * 1e9).to_string());
            row.push(u8::from(offset <= params.acceptance_window).to_string());
        }
        train.row(row);
    }
    train.save(&dir.join("fig2_train.csv"))?;
    let note = train_note(ctx);
    write_atomic(&dir.join("train_length_note.txt"), note.as_bytes())?;
    print!("{note}");

    let mut summary = BTreeMap::new();
    for &m in &ctx.spec.report.memories {
        let params = ctx.spec.link_params_for(m);
        let mut entry = serde_json::Map::new();

        let single = |seed| {
            let mut c = ctx.spec.sim_config_for(&ctx.profiles[..1], m, Policy::Single, seed)?;
            c.bin_width = step;
            Ok::<_, CliError>(c)
        };
        let configs = seeds.iter().map(|&s| single(s)).collect::<Result<Vec<_>, _>>()?;
        let moments: Vec<BinMoments> = predict_bin_moments(&configs[0], 0)?;
        let sim_mean = mean_counts(&configs, |r| r.leg_counts(0))?;
        let plain = single_rate_series(&ctx.profiles[0], &params, SingleRateModel::Uncorrected)?;
        let corrected = single_rate_series(&ctx.profiles[0], &params, SingleRateModel::Corrected)?;
        let first = run(&configs[0])?.leg_counts(0);

        let mut fig3 = Table::new(&["t_s", "rate_uncorrected", "rate_corrected", "mu", "sigma", "sim_mean", "sim_first_seed"]);
        let mut fig4 = Table::new(&["t_s", "pairs_analytic", "pairs_mu", "pairs_sigma", "pairs_sim_mean"]);
        let cum_rate = cumulative(corrected.iter().map(|r| r.rate * step));
        let cum_mu = cumulative(moments.iter().map(|b| b.mu));
        let cum_var = cumulative(moments.iter().map(|b| b.sigma * b.sigma));
        let cum_sim = cumulative(sim_mean.iter().copied());
        for i in 0..times.len().min(moments.len()) {
            fig3.row([
                times[i].to_string(),
                plain[i].rate.to_string(),
                corrected[i].rate.to_string(),
                (moments[i].mu / step).to_string(),
                (moments[i].sigma / step).to_string(),
                (sim_mean[i] / step).to_string(),
                (first[i] as f64 / step).to_string(),
            ]);
            fig4.row([
                times[i].to_string(),
                cum_rate[i].to_string(),
                cum_mu[i].to_string(),
                cum_var[i].sqrt().to_string(),
                cum_sim[i].to_string(),
            ]);
        }
        fig3.save(&dir.join(format!("fig3_rate_m{m}.csv")))?;
        fig4.save(&dir.join(format!("fig4_pairs_m{m}.csv")))?;
        entry.insert(
            "single".into(),
            json!({
                "station": ctx.profiles[0].station,
                "pairs_analytic": cum_rate.last(),
                "pairs_mu": cum_mu.last(),
                "pairs_sim_mean": cum_sim.last(),
            }),
        );

        if let Ok((a, b)) = ctx.dual() {
            let (m_a, m_b) = ctx.spec.static_split(&ctx.profiles, m)?;
            let real = dual_rate_series(a, &params, b, &params, SplitPolicy::RealDynamic)?;
            let int = dual_rate_series(a, &params, b, &params, SplitPolicy::IntDynamic)?;
            let fixed = dual_rate_series(a, &params, b, &params, SplitPolicy::Static { m_a, m_b })?;
            let dual = |policy| {
                seeds
                    .iter()
                    .map(|&s| {
                        let mut c = ctx.spec.sim_config_for(&ctx.profiles, m, policy, s)?;
                        if policy == Policy::Static {
                            c.policy = orbilink::sim_engine::AllocationPolicy::Static { m_a, m_b };
                        }
                        c.bin_width = step;
                        Ok(c)
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            };
            let sim_static = mean_counts(&dual(Policy::Static)?, SimResult::end_to_end_counts)?;
            let sim_dynamic = mean_counts(&dual(Policy::Dynamic)?, SimResult::end_to_end_counts)?;

            let mut fig5 = Table::new(&[
                "t_s",
                "rate_dynamic_real",
                "rate_dynamic_int",
                "rate_static",
                "m_A_int",
                "m_B_int",
                "sim_static_mean",
                "sim_dynamic_mean",
            ]);
            let mut fig6 = Table::new(&["t_s", "pairs_dynamic", "pairs_static", "pairs_sim_static_mean", "pairs_sim_dynamic_mean"]);
            let cum_dyn = cumulative(int.iter().map(|r| r.rate * step));
            let cum_static = cumulative(fixed.iter().map(|r| r.rate * step));
            let cum_sim_static = cumulative(sim_static.iter().copied());
            let cum_sim_dynamic = cumulative(sim_dynamic.iter().copied());
            for i in 0..times.len().min(sim_static.len()) {
                fig5.row([
                    times[i].to_string(),
                    real[i].rate.to_string(),
                    int[i].rate.to_string(),
                    fixed[i].rate.to_string(),
                    opt(int[i].m_a),
                    opt(int[i].m_b),
                    (sim_static[i] / step).to_string(),
                    (sim_dynamic[i] / step).to_string(),
                ]);
                fig6.row([
                    times[i].to_string(),
                    cum_dyn[i].to_string(),
                    cum_static[i].to_string(),
                    cum_sim_static[i].to_string(),
                    cum_sim_dynamic[i].to_string(),
                ]);
            }
            fig5.save(&dir.join(format!("fig5_dual_rate_m{m}.csv")))?;
            fig6.save(&dir.join(format!("fig6_dual_pairs_m{m}.csv")))?;
            let (dynamic, stat) = (integrated_pairs(&int, step), integrated_pairs(&fixed, step));
            entry.insert(
                "dual".into(),
                json!({
                    "static_split": [m_a, m_b],
                    "pairs_dynamic": dynamic,
                    "pairs_static": stat,
                    "gain": dynamic / stat - 1.0,
                    "pairs_sim_dynamic_mean": cum_sim_dynamic.last(),
                    "pairs_sim_static_mean": cum_sim_static.last(),
                }),
            );
            println!(
                "m_S={m}: static split ({m_a}, {m_b}), dynamic/static analytic gain {:.1}%",
                100.0 * (dynamic / stat - 1.0)
            );
        }
        summary.insert(m.to_string(), serde_json::Value::Object(entry));
    }
    let bound = max_train_length(REFERENCE_RADIAL_VELOCITY, &params).bounded();
    write_json(
        &dir.join("report.json"),
        &json!({
            "seeds": seeds,
            "memories": summary,
            "train_length": {
                "radial_velocity_mps": REFERENCE_RADIAL_VELOCITY,
                "computed": bound,
                "published": QUOTED_TRAIN_LENGTH,
                "note": "the literal bound floor(w_i*c/(|v_r|*T_em)) does not reproduce the published value",
            },
        }),
    )?;
    Ok(())
}
