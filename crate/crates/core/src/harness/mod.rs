//! Experiment configuration, dispatch, and reproducibility plumbing.
//!
//! A run is described by an [`ExperimentConfig`] (JSON on disk, flags in the
//! CLI). `run_experiment` builds the cover or precomputation, generates the
//! adversary stream, runs the learner, and writes the CSV trace plus a JSON
//! metadata sidecar. The enumeration cap defaults to
//! [`crate::DEFAULT_ENUMERATION_CAP`] and can be
//! overridden with the `MENU_FORGE_CAP` environment variable.

mod adversary;
mod trace;

pub use adversary::{item_stream, type_index_stream, unit_stream, AdversarySpec, BuyerStream};
pub use trace::{fmt_f64, render_trace, write_trace, TRACE_HEADER};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cover::{lottery_cover, tariff_cover, LotteryCoverParams, TariffCoverParams};
use crate::distributional::{erm_over_cover, sample_complexity_lottery, sample_complexity_tariff};
use crate::error::{Error, Result};
use crate::experts::{run_bandit, run_full_information, RegretTrace};
use crate::limited_types::{precompute, run_limited_bandit, TypeSet};
use crate::mechanisms::{
    best_response_lottery, best_response_tariff, DemandKind, LotteryMenu, TariffMenu,
};
use crate::parallel;
use crate::{dispersion, DEFAULT_ENUMERATION_CAP};

/// Mechanism family of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tariff,
    Lottery,
}

/// Which learner to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// Full-information weighted majority over the cover.
    Wm,
    /// Bandit Exp3 over the cover.
    Exp3,
    /// Block-structured limited-type learner over extreme points.
    Limited,
    /// Grid-discretized semi-bandit Exp3-SET (tariffs only).
    Semibandit,
    /// Empirical risk minimization over the cover.
    Erm,
}

/// Optional hyperparameters; learner-specific defaults fill the gaps.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Discretization pitch.
    pub alpha: Option<f64>,
    /// Weighted-majority / Exp3 learning rate.
    pub beta: Option<f64>,
    /// Exp3 exploration mix.
    pub gamma: Option<f64>,
    /// Lottery rounding level decay.
    pub delta: Option<f64>,
    /// Lottery rounding level count.
    pub levels: Option<usize>,
    /// Extreme-point perturbation (limited) or accuracy target (ERM).
    pub epsilon: Option<f64>,
    /// Spanner approximation factor.
    pub spanner_c: Option<f64>,
    /// Semi-bandit step size.
    pub step: Option<f64>,
    /// ERM confidence target.
    pub erm_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub ell: usize,
    /// `K` for tariffs.
    #[serde(default)]
    pub max_units: Option<usize>,
    /// `m` for lotteries.
    #[serde(default)]
    pub items: Option<usize>,
    pub h: f64,
    pub learner: Learner,
    #[serde(default)]
    pub params: LearnerParams,
    pub adversary: AdversarySpec,
    /// Horizon `T` for online learners.
    #[serde(default)]
    pub rounds: Option<usize>,
    /// Sample count `N` for ERM (defaults to the sample-complexity bound).
    #[serde(default)]
    pub samples: Option<usize>,
    /// Known type set (required by the limited learner).
    #[serde(default)]
    pub types: Option<TypeSet>,
    pub seed: u64,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(Error::Config("ell must be positive".into()));
        }
        if self.h <= 0.0 {
            return Err(Error::Config("H must be positive".into()));
        }
        match self.family {
            Family::Tariff => {
                if self.max_units.unwrap_or(0) == 0 {
                    return Err(Error::Config("tariff runs need max_units >= 1".into()));
                }
            }
            Family::Lottery => {
                if self.items.unwrap_or(0) == 0 {
                    return Err(Error::Config("lottery runs need items >= 1".into()));
                }
            }
        }
        match self.learner {
            Learner::Erm => {
                if self.samples.is_none() && self.params.epsilon.is_none() {
                    return Err(Error::Config(
                        "ERM needs either samples or params.epsilon".into(),
                    ));
                }
            }
            Learner::Limited => {
                if self.types.is_none() {
                    return Err(Error::Config("limited runs need a type set".into()));
                }
                if self.rounds.unwrap_or(0) == 0 {
                    return Err(Error::Config("limited runs need rounds >= 1".into()));
                }
            }
            Learner::Semibandit => {
                if self.family != Family::Tariff {
                    return Err(Error::Config("semi-bandit supports tariffs only".into()));
                }
                if self.rounds.unwrap_or(0) == 0 {
                    return Err(Error::Config("semi-bandit runs need rounds >= 1".into()));
                }
            }
            _ => {
                if self.rounds.unwrap_or(0) == 0 {
                    return Err(Error::Config("online runs need rounds >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Enumeration cap: `MENU_FORGE_CAP` override or the default.
pub fn enumeration_cap() -> u128 {
    std::env::var("MENU_FORGE_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ENUMERATION_CAP)
}

/// Summary of a completed run, echoed into the sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub rows: usize,
    pub realized_cum_revenue: f64,
    pub best_cum_revenue: f64,
    pub final_regret: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover_size: Option<usize>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

fn trace_report(
    trace: &RegretTrace,
    cover_size: Option<usize>,
    extra: serde_json::Value,
) -> RunReport {
    RunReport {
        rows: trace.rows.len(),
        realized_cum_revenue: trace.realized_cum_revenue,
        best_cum_revenue: trace.best_cum_revenue,
        final_regret: trace.final_regret(),
        cover_size,
        extra,
    }
}

fn horizon_defaults(config: &ExperimentConfig) -> (f64, f64, f64, f64, usize) {
    let t = config.rounds.unwrap_or(1) as f64;
    let ell = config.ell as f64;
    match (config.family, config.learner) {
        (Family::Tariff, Learner::Exp3) => {
            let alpha = t.powf(-1.0 / (2.0 * (1.0 + ell)));
            let bg = t.powf(-1.0 / (4.0 * (1.0 + ell)));
            (alpha, bg, bg, 0.0, 0)
        }
        (Family::Tariff, _) => {
            let rt = 1.0 / t.sqrt();
            (rt, rt, rt, 0.0, 0)
        }
        (Family::Lottery, Learner::Exp3) => {
            let m = config.items.unwrap_or(1) as f64;
            let alpha = t.powf(-1.0 / (ell * m + 2.0));
            let bg = t.powf(-1.0 / (4.0 * ell * m + 8.0));
            let delta = t.powf(-1.0 / (2.0 * ell * m + 4.0));
            let levels = t.powf(1.0 / (2.0 * ell * m + 4.0)).ceil() as usize;
            (alpha, bg, bg, delta, levels.max(1))
        }
        (Family::Lottery, _) => {
            let alpha = 1.0 / t;
            let beta = 1.0 / t.sqrt();
            let delta = 1.0 / t.sqrt();
            let levels = t.sqrt().ceil() as usize;
            (alpha, beta, beta, delta, levels.max(1))
        }
    }
}

fn clamp_rate(x: f64) -> f64 {
    x.clamp(1e-6, 1.0)
}

/// Builds the cover, runs the configured learner, and returns the trace with
/// its report. Pure except for reading fixed-sequence files.
pub fn run_online(config: &ExperimentConfig) -> Result<(RegretTrace, RunReport)> {
    let cap = Some(enumeration_cap());
    let rounds = config.rounds.unwrap_or(0);
    let (d_alpha, d_beta, d_gamma, d_delta, d_levels) = horizon_defaults(config);
    let alpha = config.params.alpha.unwrap_or(d_alpha);
    let beta = clamp_rate(config.params.beta.unwrap_or(d_beta));
    let gamma = clamp_rate(config.params.gamma.unwrap_or(d_gamma));

    match config.learner {
        Learner::Wm | Learner::Exp3 => match config.family {
            Family::Tariff => {
                let k = config.max_units.unwrap();
                let params = TariffCoverParams::new(alpha, config.h, k, config.ell)?;
                let cover = tariff_cover(&params, cap)?;
                let buyers = unit_stream(&config.adversary, rounds, k, config.h, config.seed)?;
                let rev = |m: &TariffMenu, b: &crate::mechanisms::UnitValuation| {
                    let br = best_response_tariff(m, b);
                    (br.revenue, br.choice)
                };
                let trace = match config.learner {
                    Learner::Wm => {
                        run_full_information(&cover, &buyers, rev, config.h, beta, config.seed)?
                    }
                    _ => run_bandit(&cover, &buyers, rev, config.h, beta, gamma, config.seed)?,
                };
                let report = trace_report(
                    &trace,
                    Some(cover.len()),
                    serde_json::json!({"alpha": alpha, "beta": beta}),
                );
                Ok((trace, report))
            }
            Family::Lottery => {
                let m = config.items.unwrap();
                let delta = config.params.delta.unwrap_or(d_delta).clamp(1e-6, 0.999);
                let levels = config.params.levels.unwrap_or(d_levels).max(1);
                let params = LotteryCoverParams::new(
                    alpha.min(0.999),
                    delta,
                    levels,
                    m,
                    config.h,
                    config.ell,
                )?;
                let cover = lottery_cover(&params, cap)?;
                let buyers = item_stream(
                    &config.adversary,
                    rounds,
                    m,
                    config.h,
                    DemandKind::Additive,
                    config.seed,
                )?;
                let payoff_cap = m as f64 * config.h;
                let rev = |menu: &LotteryMenu, b: &crate::mechanisms::ItemValuation| {
                    let br =
                        best_response_lottery(menu, b).expect("additive buyers accept any menu");
                    (br.revenue, br.choice)
                };
                let trace = match config.learner {
                    Learner::Wm => {
                        run_full_information(&cover, &buyers, rev, payoff_cap, beta, config.seed)?
                    }
                    _ => run_bandit(&cover, &buyers, rev, payoff_cap, beta, gamma, config.seed)?,
                };
                let report = trace_report(
                    &trace,
                    Some(cover.len()),
                    serde_json::json!({"alpha": alpha, "beta": beta, "delta": delta, "levels": levels}),
                );
                Ok((trace, report))
            }
        },
        Learner::Limited => {
            let types = config.types.clone().unwrap();
            let epsilon = config
                .params
                .epsilon
                .unwrap_or(1.0 / (rounds as f64).sqrt());
            let c = config.params.spanner_c.unwrap_or(2.0);
            let pre = precompute(&types, config.ell, epsilon, c, cap)?;
            let seq = type_index_stream(&config.adversary, rounds, types.len(), config.seed)?;
            let trace = run_limited_bandit(&pre, &seq, config.params.beta, config.seed)?;
            let report = trace_report(
                &trace,
                Some(pre.experts()),
                serde_json::json!({
                    "extreme_points": pre.experts(),
                    "indicators": pre.indicators.len(),
                    "spanner_size": pre.spanner.vectors.len(),
                    "blocks": pre.blocks(rounds),
                    "epsilon": epsilon,
                    "spanner_c": pre.spanner.approximation_c,
                }),
            );
            Ok((trace, report))
        }
        Learner::Semibandit => {
            let k = config.max_units.unwrap();
            let t = rounds as f64;
            let grid_alpha = config.params.alpha.unwrap_or(1.0 / t.sqrt());
            let params = TariffCoverParams::new(grid_alpha, config.h, k, config.ell)?;
            let grid = tariff_cover(&params, cap)?;
            let buyers = unit_stream(&config.adversary, rounds, k, config.h, config.seed)?;
            let step = config.params.step.unwrap_or_else(|| {
                let ell = config.ell as f64;
                ((2.0 * ell * (2.0 * config.h * config.h * t.sqrt()).ln()).max(1.0) / t).sqrt()
                    / config.h
            });
            let trace =
                dispersion::run_semibandit_exp3set(&grid, &buyers, config.h, step, config.seed)?;
            let report = trace_report(
                &trace,
                Some(grid.len()),
                serde_json::json!({"alpha": grid_alpha, "step": step}),
            );
            Ok((trace, report))
        }
        Learner::Erm => Err(Error::Config(
            "ERM runs produce a report, not a trace; use run_erm".into(),
        )),
    }
}

/// ERM run output.
#[derive(Debug, Clone, Serialize)]
pub struct ErmReport {
    pub samples_used: usize,
    pub cover_size: usize,
    pub empirical_revenue: f64,
    pub menu_index: usize,
    pub menu: serde_json::Value,
    pub alpha: f64,
}

/// Runs distributional ERM over the discretized cover.
pub fn run_erm(config: &ExperimentConfig) -> Result<ErmReport> {
    let cap = Some(enumeration_cap());
    let epsilon = config.params.epsilon.unwrap_or(0.1);
    let erm_delta = config.params.erm_delta.unwrap_or(0.1);
    match config.family {
        Family::Tariff => {
            let k = config.max_units.unwrap();
            let n = config.samples.unwrap_or_else(|| {
                sample_complexity_tariff(epsilon, erm_delta, config.h, k, config.ell)
            });
            // Balance discretization error with statistical error:
            // alpha = (epsilon/2) / (2 K ell).
            let alpha = config
                .params
                .alpha
                .unwrap_or(epsilon / 2.0 / (2.0 * k as f64 * config.ell as f64));
            let params = TariffCoverParams::new(alpha, config.h, k, config.ell)?;
            let cover = tariff_cover(&params, cap)?;
            let samples = unit_stream(&config.adversary, n, k, config.h, config.seed)?;
            let (idx, mean) =
                erm_over_cover(&samples, &cover, |m, b| best_response_tariff(m, b).revenue)?;
            Ok(ErmReport {
                samples_used: n,
                cover_size: cover.len(),
                empirical_revenue: mean,
                menu_index: idx,
                menu: serde_json::to_value(&cover[idx])?,
                alpha,
            })
        }
        Family::Lottery => {
            let m = config.items.unwrap();
            let chain = sample_complexity_lottery(epsilon, erm_delta, config.h, m, config.ell);
            let n = config.samples.unwrap_or(chain.samples);
            let alpha = config.params.alpha.unwrap_or(chain.alpha);
            let delta = config.params.delta.unwrap_or(chain.level_delta);
            let levels = config.params.levels.unwrap_or(chain.levels);
            let params = LotteryCoverParams::new(alpha, delta, levels, m, config.h, config.ell)?;
            let cover = lottery_cover(&params, cap)?;
            let samples = item_stream(
                &config.adversary,
                n,
                m,
                config.h,
                DemandKind::Additive,
                config.seed,
            )?;
            let (idx, mean) = erm_over_cover(&samples, &cover, |menu, b| {
                best_response_lottery(menu, b)
                    .expect("additive buyers accept any menu")
                    .revenue
            })?;
            Ok(ErmReport {
                samples_used: n,
                cover_size: cover.len(),
                empirical_revenue: mean,
                menu_index: idx,
                menu: serde_json::to_value(&cover[idx])?,
                alpha,
            })
        }
    }
}

fn content_hash(config: &ExperimentConfig) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(config)?);
    if let AdversarySpec::FixedSequence { path } = &config.adversary {
        hasher.update(std::fs::read(path)?);
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

fn write_sidecar(
    config: &ExperimentConfig,
    report: serde_json::Value,
    wall_time_secs: f64,
) -> Result<()> {
    let sidecar = serde_json::json!({
        "config": config,
        "content_hash": content_hash(config)?,
        "wall_time_secs": wall_time_secs,
        "report": report,
    });
    let mut path = config.output.clone();
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    name.push_str(".meta.json");
    path.set_file_name(name);
    std::fs::write(path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Runs one experiment end to end: learner, CSV trace (or ERM JSON report),
/// metadata sidecar.
pub fn run_experiment(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let start = Instant::now();
    match config.learner {
        Learner::Erm => {
            let report = run_erm(config)?;
            std::fs::write(&config.output, serde_json::to_string_pretty(&report)?)?;
            write_sidecar(
                config,
                serde_json::to_value(&report)?,
                start.elapsed().as_secs_f64(),
            )
        }
        _ => {
            let (trace, report) = run_online(config)?;
            write_trace(&config.output, &trace)?;
            write_sidecar(
                config,
                serde_json::to_value(&report)?,
                start.elapsed().as_secs_f64(),
            )
        }
    }
}

/// Runs the same experiment across a seed range, one output file per seed
/// (`<stem>_seed<k><ext>`), in parallel when enabled.
pub fn run_seed_sweep(config: &ExperimentConfig, seeds: std::ops::Range<u64>) -> Result<()> {
    let seeds: Vec<u64> = seeds.collect();
    let results = parallel::map_slice(&seeds, |&seed| {
        let mut c = config.clone();
        c.seed = seed;
        let stem = config
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".into());
        let ext = config
            .output
            .extension()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into());
        c.output = config
            .output
            .with_file_name(format!("{stem}_seed{seed}.{ext}"));
        run_experiment(&c)
    });
    for r in results {
        r?;
    }
    Ok(())
}

/// The trace invariants every emitted CSV must satisfy; exposed for tests.
pub fn check_trace_invariants(trace: &RegretTrace) -> Result<()> {
    let mut prev_cum = 0.0;
    let mut prev_best = 0.0;
    for row in &trace.rows {
        if row.cum_revenue + 1e-9 < prev_cum || row.best_cum + 1e-9 < prev_best {
            return Err(Error::InvalidConstruction(
                "cumulative columns must be nondecreasing".into(),
            ));
        }
        if (row.regret - (row.best_cum - row.cum_revenue)).abs() > 1e-9 {
            return Err(Error::InvalidConstruction(
                "regret must equal best_cum - cum_revenue".into(),
            ));
        }
        prev_cum = row.cum_revenue;
        prev_best = row.best_cum;
    }
    Ok(())
}
