//! Finite-expert no-regret learners: a weighted-majority variant for full
//! information and an Exp3 variant for bandit feedback.
//!
//! Experts are menus from a discretized cover; gains are revenues in
//! `[0, payoff_cap]` where the cap is `H` for tariffs and `m*H` for
//! lotteries. Weights follow `w_k = (1+beta)^(cum_gain_k / payoff_cap)` and
//! are kept in log space so large horizons cannot overflow. A run is
//! deterministic given its seed; independent runs (seeds, sweeps) can execute
//! in parallel.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mechanisms::Choice;
use crate::parallel;

/// Weight state shared by the weighted-majority and Exp3 learners.
#[derive(Debug, Clone)]
pub struct ExpertState {
    cumulative_gain: Vec<f64>,
    beta: f64,
    gamma: Option<f64>,
    payoff_cap: f64,
}

impl ExpertState {
    /// `gamma` is only used by Exp3 mixing; pass `None` for plain weighted
    /// majority.
    pub fn new(experts: usize, beta: f64, gamma: Option<f64>, payoff_cap: f64) -> Result<Self> {
        if experts == 0 {
            return Err(Error::Config("need at least one expert".into()));
        }
        if !(0.0..=1.0).contains(&beta) || beta == 0.0 {
            return Err(Error::Config(format!("beta must be in (0,1], got {beta}")));
        }
        if let Some(g) = gamma {
            if !(0.0..=1.0).contains(&g) || g == 0.0 {
                return Err(Error::Config(format!("gamma must be in (0,1], got {g}")));
            }
        }
        if payoff_cap <= 0.0 {
            return Err(Error::Config("payoff cap must be positive".into()));
        }
        Ok(ExpertState {
            cumulative_gain: vec![0.0; experts],
            beta,
            gamma,
            payoff_cap,
        })
    }

    pub fn len(&self) -> usize {
        self.cumulative_gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative_gain.is_empty()
    }

    pub fn cumulative_gain(&self) -> &[f64] {
        &self.cumulative_gain
    }

    /// Log-weights `ln w_k = (cum_k / cap) * ln(1+beta)`.
    pub fn log_weights(&self) -> Vec<f64> {
        let scale = (1.0 + self.beta).ln() / self.payoff_cap;
        self.cumulative_gain.iter().map(|&g| g * scale).collect()
    }

    /// Normalized weight distribution `pi`, computed with a stable softmax.
    pub fn weight_distribution(&self) -> Vec<f64> {
        let logs = self.log_weights();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        debug_assert!(total.is_finite() && total > 0.0);
        for p in &mut probs {
            *p /= total;
        }
        probs
    }

    /// Exp3 sampling distribution `pi_bar = (1-gamma) pi + gamma/n`.
    pub fn exploration_distribution(&self) -> Vec<f64> {
        let gamma = self.gamma.expect("exploration distribution needs gamma");
        let n = self.len() as f64;
        self.weight_distribution()
            .into_iter()
            .map(|p| (1.0 - gamma) * p + gamma / n)
            .collect()
    }
}

/// Samples an index from a probability vector by inverse-CDF walk.
pub(crate) fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Samples an expert from the weighted-majority distribution `pi`.
pub fn wm_select<R: Rng>(state: &ExpertState, rng: &mut R) -> usize {
    sample_index(&state.weight_distribution(), rng)
}

/// Samples an expert from the Exp3 mixed distribution `pi_bar`.
pub fn exp3_select<R: Rng>(state: &ExpertState, rng: &mut R) -> usize {
    sample_index(&state.exploration_distribution(), rng)
}

/// Full-information update: adds one gain per expert to the cumulative
/// revenues. Gains must lie in `[0, payoff_cap]`.
pub fn wm_update_full(state: &mut ExpertState, gains: &[f64]) -> Result<()> {
    assert_eq!(gains.len(), state.len(), "one gain per expert");
    for &g in gains {
        if !(0.0..=state.payoff_cap + 1e-12).contains(&g) {
            return Err(Error::GainOutOfRange {
                gain: g,
                cap: state.payoff_cap,
            });
        }
    }
    for (cum, &g) in state.cumulative_gain.iter_mut().zip(gains) {
        *cum += g;
    }
    Ok(())
}

/// Bandit update: credits the chosen expert with the importance-weighted
/// simulated gain `(gamma/n) * g / pi_bar[chosen]`; all other gains are 0.
/// Returns the simulated gain.
pub fn exp3_step(state: &mut ExpertState, realized_gain: f64, chosen: usize) -> Result<f64> {
    if !(0.0..=state.payoff_cap + 1e-12).contains(&realized_gain) {
        return Err(Error::GainOutOfRange {
            gain: realized_gain,
            cap: state.payoff_cap,
        });
    }
    let gamma = state
        .gamma
        .ok_or_else(|| Error::Config("exp3_step needs gamma".into()))?;
    let n = state.len() as f64;
    let pi_bar = state.exploration_distribution()[chosen];
    let simulated = (gamma / n) * realized_gain / pi_bar;
    state.cumulative_gain[chosen] += simulated;
    Ok(simulated)
}

/// One per-round record of a learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based round index.
    pub round: usize,
    /// Index of the expert (menu) played.
    pub expert: usize,
    /// The buyer's selected option this round.
    pub choice: Choice,
    /// Realized revenue this round.
    pub revenue: f64,
    /// Cumulative realized revenue through this round.
    pub cum_revenue: f64,
    /// Cumulative revenue of the best fixed expert in hindsight through this
    /// round.
    pub best_cum: f64,
    /// `best_cum - cum_revenue`.
    pub regret: f64,
}

/// Full record of a learning run.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
    /// Index of the best fixed expert in hindsight at the horizon.
    pub best_expert: usize,
    /// That expert's cumulative revenue.
    pub best_cum_revenue: f64,
    /// The learner's cumulative revenue.
    pub realized_cum_revenue: f64,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.best_cum_revenue - self.realized_cum_revenue
    }
}

/// Accumulates per-round rows plus the per-expert hindsight revenues.
pub(crate) struct TraceBuilder {
    rows: Vec<TraceRow>,
    expert_cum: Vec<f64>,
    cum_revenue: f64,
}

impl TraceBuilder {
    pub fn new(experts: usize, rounds: usize) -> Self {
        TraceBuilder {
            rows: Vec::with_capacity(rounds),
            expert_cum: vec![0.0; experts],
            cum_revenue: 0.0,
        }
    }

    /// Records a round given the played expert, its realized revenue, and the
    /// counterfactual revenue of every expert against this round's buyer.
    pub fn record(&mut self, expert: usize, choice: Choice, revenue: f64, counterfactual: &[f64]) {
        for (cum, &g) in self.expert_cum.iter_mut().zip(counterfactual) {
            *cum += g;
        }
        self.cum_revenue += revenue;
        let best_cum = self
            .expert_cum
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        self.rows.push(TraceRow {
            round: self.rows.len() + 1,
            expert,
            choice,
            revenue,
            cum_revenue: self.cum_revenue,
            best_cum,
            regret: best_cum - self.cum_revenue,
        });
    }

    pub fn finish(self) -> RegretTrace {
        let (best_expert, best_cum_revenue) =
            self.expert_cum
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                });
        RegretTrace {
            rows: self.rows,
            best_expert,
            best_cum_revenue: if best_cum_revenue.is_finite() {
                best_cum_revenue
            } else {
                0.0
            },
            realized_cum_revenue: self.cum_revenue,
        }
    }
}

/// Runs the full-information weighted-majority learner.
///
/// Each round samples a menu from `pi`, observes the revenue of *every* cover
/// menu against the arriving buyer (evaluated in parallel when enabled), and
/// performs the full gain-vector update. The standard horizon tuning is
/// `alpha = beta = 1/sqrt(T)`; the cover is built by the caller.
pub fn run_full_information<M, B, F>(
    cover: &[M],
    buyers: &[B],
    revenue_and_choice: F,
    payoff_cap: f64,
    beta: f64,
    seed: u64,
) -> Result<RegretTrace>
where
    M: Sync,
    B: Sync,
    F: Fn(&M, &B) -> (f64, Choice) + Sync + Send,
{
    let mut state = ExpertState::new(cover.len(), beta, None, payoff_cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TraceBuilder::new(cover.len(), buyers.len());
    for buyer in buyers {
        let chosen = wm_select(&state, &mut rng);
        let outcomes = parallel::map_slice(cover, |menu| revenue_and_choice(menu, buyer));
        let gains: Vec<f64> = outcomes.iter().map(|(r, _)| *r).collect();
        let (revenue, choice) = outcomes[chosen];
        wm_update_full(&mut state, &gains)?;
        trace.record(chosen, choice, revenue, &gains);
    }
    Ok(trace.finish())
}

/// Runs the bandit Exp3 learner: only the chosen menu's revenue is observed
/// by the learner; the full counterfactual vector is still recorded in the
/// trace for regret accounting.
///
/// The standard horizon tuning is `alpha = T^(-1/(2(1+ell)))` and
/// `beta = gamma = T^(-1/(4(1+ell)))`.
pub fn run_bandit<M, B, F>(
    cover: &[M],
    buyers: &[B],
    revenue_and_choice: F,
    payoff_cap: f64,
    beta: f64,
    gamma: f64,
    seed: u64,
) -> Result<RegretTrace>
where
    M: Sync,
    B: Sync,
    F: Fn(&M, &B) -> (f64, Choice) + Sync + Send,
{
    let mut state = ExpertState::new(cover.len(), beta, Some(gamma), payoff_cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TraceBuilder::new(cover.len(), buyers.len());
    for buyer in buyers {
        let chosen = exp3_select(&state, &mut rng);
        let outcomes = parallel::map_slice(cover, |menu| revenue_and_choice(menu, buyer));
        let gains: Vec<f64> = outcomes.iter().map(|(r, _)| *r).collect();
        let (revenue, choice) = outcomes[chosen];
        exp3_step(&mut state, revenue, chosen)?;
        trace.record(chosen, choice, revenue, &gains);
    }
    Ok(trace.finish())
}
