//! Empirical dispersion measurement and the semi-bandit learner.
//!
//! For tariffs, indifference hyperplanes built from i.i.d. bounded-density
//! valuations spread out: the number of planes cutting a radius-`w` ball
//! scales linearly in `w`. For lotteries there is a menu construction whose
//! indifference hyperplane crosses an `epsilon`-ball with probability
//! bounded below by a constant independent of `epsilon`; both effects are
//! measured here. The module also runs a grid-discretized version of the
//! continuous Exp3-SET semi-bandit learner for tariffs, where each round
//! reveals the loss on the whole region of menus sharing the buyer's choice.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{RegretTrace, TraceBuilder};
use crate::limited_types::{build_hyperplanes, Hyperplane, TypeSet};
use crate::mechanisms::{best_response_tariff, TariffMenu, UnitValuation};
use crate::parallel;

/// Parameters shared by the dispersion experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DispersionParams {
    /// Base ball radius for split counting.
    pub w: f64,
    /// Density bound of the valuation distribution.
    pub kappa: f64,
    /// Lipschitz constant of the revenue pieces (`K + 1` for tariffs).
    pub lipschitz: f64,
    /// Confidence parameter (reported in metadata only).
    pub zeta: f64,
    /// Sampled ball centers per radius (or Monte Carlo draws).
    pub trials: usize,
}

/// A named bounded-density distribution on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedDensity {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `f(x) = 2(1-x)` on `[0, 1]`.
    TriangularDown,
    /// Piecewise-constant density; `breaks` has one more entry than
    /// `heights` and heights integrate to 1.
    PiecewiseConstant {
        breaks: Vec<f64>,
        heights: Vec<f64>,
    },
}

impl BoundedDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundedDensity::Uniform { lo, hi } => {
                if hi <= lo {
                    return Err(Error::Config(format!("empty uniform support [{lo}, {hi}]")));
                }
            }
            BoundedDensity::TriangularDown => {}
            BoundedDensity::PiecewiseConstant { breaks, heights } => {
                if breaks.len() != heights.len() + 1 {
                    return Err(Error::Config(
                        "piecewise density needs |breaks| = |heights| + 1".into(),
                    ));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("breaks must increase".into()));
                }
                if heights.iter().any(|&h| h < 0.0) {
                    return Err(Error::Config("heights must be nonnegative".into()));
                }
                let mass: f64 = breaks
                    .windows(2)
                    .zip(heights)
                    .map(|(w, h)| (w[1] - w[0]) * h)
                    .sum();
                if (mass - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "piecewise density integrates to {mass}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Supremum of the density.
    pub fn kappa(&self) -> f64 {
        match self {
            BoundedDensity::Uniform { lo, hi } => 1.0 / (hi - lo),
            BoundedDensity::TriangularDown => 2.0,
            BoundedDensity::PiecewiseConstant { heights, .. } => {
                heights.iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            BoundedDensity::Uniform { lo, hi } => (*lo, *hi),
            BoundedDensity::TriangularDown => (0.0, 1.0),
            BoundedDensity::PiecewiseConstant { breaks, .. } => {
                (breaks[0], *breaks.last().unwrap())
            }
        }
    }

    /// CDF at `x` (all named densities have closed forms).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            BoundedDensity::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            BoundedDensity::TriangularDown => {
                let x = x.clamp(0.0, 1.0);
                2.0 * x - x * x
            }
            BoundedDensity::PiecewiseConstant { breaks, heights } => {
                let mut acc = 0.0;
                for (w, h) in breaks.windows(2).zip(heights) {
                    if x <= w[0] {
                        break;
                    }
                    acc += (x.min(w[1]) - w[0]) * h;
                }
                acc.clamp(0.0, 1.0)
            }
        }
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match self {
            BoundedDensity::Uniform { lo, hi } => lo + u * (hi - lo),
            BoundedDensity::TriangularDown => 1.0 - (1.0 - u).sqrt(),
            BoundedDensity::PiecewiseConstant { breaks, heights } => {
                let mut acc = 0.0;
                for (w, h) in breaks.windows(2).zip(heights) {
                    let mass = (w[1] - w[0]) * h;
                    if u <= acc + mass || mass == 0.0 {
                        if mass == 0.0 {
                            acc += mass;
                            continue;
                        }
                        return w[0] + (u - acc) / h;
                    }
                    acc += mass;
                }
                *breaks.last().unwrap()
            }
        }
    }
}

/// Counts hyperplanes (with multiplicity) whose distance to `center` is
/// strictly below `radius`.
pub fn count_ball_splits(planes: &[Hyperplane], center: &[f64], radius: f64) -> usize {
    planes
        .iter()
        .filter(|p| p.distance(center) < radius)
        .map(|p| p.multiplicity)
        .sum()
}

/// One row of the tariff split-count table.
#[derive(Debug, Clone, Serialize)]
pub struct SplitRow {
    pub w: f64,
    pub mean_splits: f64,
    pub max_splits: usize,
}

/// Draws a monotone valuation: `K` i.i.d. marginals, sorted ascending.
pub fn sample_unit_valuation<R: Rng>(
    density: &BoundedDensity,
    max_units: usize,
    h: f64,
    rng: &mut R,
) -> UnitValuation {
    let mut vs: Vec<f64> = (0..max_units)
        .map(|_| density.sample(rng).clamp(0.0, h))
        .collect();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut values = Vec::with_capacity(max_units + 1);
    values.push(0.0);
    values.extend(vs);
    UnitValuation::new(values, h).expect("sorted clamped draws form a valid valuation")
}

/// Builds the indifference-hyperplane multiset of `t` i.i.d. valuations and
/// reports, for each radius in `schedule`, the mean and max number of planes
/// cutting a ball around random interior centers.
#[allow(clippy::too_many_arguments)]
pub fn tariff_dispersion_experiment(
    params: &DispersionParams,
    t: usize,
    ell: usize,
    max_units: usize,
    h: f64,
    density: &BoundedDensity,
    schedule: &[f64],
    seed: u64,
) -> Result<Vec<SplitRow>> {
    density.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes: Vec<Hyperplane> = if t == 0 {
        Vec::new()
    } else {
        let types: Vec<UnitValuation> = (0..t)
            .map(|_| sample_unit_valuation(density, max_units, h, &mut rng))
            .collect();
        build_hyperplanes(&TypeSet::unit(types)?, ell)?
            .into_iter()
            .filter(|p| !p.is_box_facet())
            .collect()
    };
    let dim = 2 * ell;
    // Centers stay a ball-radius away from the box boundary so every tested
    // ball lies inside the parameter box.
    let margin = schedule
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .min(h / 4.0);
    let centers: Vec<Vec<f64>> = (0..params.trials)
        .map(|_| {
            (0..dim)
                .map(|_| rng.gen_range(margin..=(h - margin)))
                .collect()
        })
        .collect();
    let rows = schedule
        .iter()
        .map(|&w| {
            let counts = parallel::map_slice(&centers, |c| count_ball_splits(&planes, c, w));
            let total: usize = counts.iter().sum();
            SplitRow {
                w,
                mean_splits: total as f64 / counts.len().max(1) as f64,
                max_splits: counts.iter().cloned().max().unwrap_or(0),
            }
        })
        .collect();
    Ok(rows)
}

/// One row of the lottery dispersion-failure table.
#[derive(Debug, Clone, Serialize)]
pub struct FailureRow {
    pub epsilon: f64,
    /// Probability that the indifference hyperplane of the constructed
    /// near-identical lottery pair crosses the epsilon-ball. Exact by CDF
    /// for the named densities.
    pub estimate: f64,
    /// The theoretical floor `c(c+1) / ((L+c+1) * kappa)`.
    pub floor: f64,
    /// Monte Carlo cross-check over `trials` draws (when requested).
    pub mc_estimate: Option<f64>,
}

/// The two-lottery maximizer construction: prices differ by `(L+1/2) eps`,
/// allocations by `(L+1) eps / c + eps/2`. Its indifference hyperplane
/// crosses the `eps`-ball at the maximizer iff the buyer's item value lands
/// in `[L c/(L+c+1), c]` — an interval that does not shrink with `eps`.
pub fn lottery_dispersion_failure(
    c: f64,
    lipschitz: f64,
    h: f64,
    epsilon_schedule: &[f64],
    density: &BoundedDensity,
    trials: usize,
    seed: u64,
) -> Result<Vec<FailureRow>> {
    if c > h {
        return Err(Error::InvalidConstruction(format!(
            "construction needs c <= H, got c={c}, H={h}"
        )));
    }
    density.validate()?;
    let kappa = density.kappa();
    let v_min = lipschitz * c / (lipschitz + c + 1.0);
    let v_max = c;
    let floor = (c * (c + 1.0) / (lipschitz + c + 1.0)) / kappa;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = epsilon_schedule
        .iter()
        .map(|&eps| {
            // The crossing interval is epsilon-free; sanity-check the
            // construction stays inside the parameter box for this epsilon.
            let price_gap = (lipschitz + 0.5) * eps;
            let alloc_gap = (lipschitz + 1.0) * eps / c + eps / 2.0;
            let feasible = price_gap < h && alloc_gap < 1.0;
            let estimate = if feasible {
                density.cdf(v_max) - density.cdf(v_min)
            } else {
                f64::NAN
            };
            let mc_estimate = (feasible && trials > 0).then(|| {
                let hits = (0..trials)
                    .filter(|_| {
                        let v = density.sample(&mut rng);
                        (v_min..=v_max).contains(&v)
                    })
                    .count();
                hits as f64 / trials as f64
            });
            FailureRow {
                epsilon: eps,
                estimate,
                floor,
                mc_estimate,
            }
        })
        .collect();
    Ok(rows)
}

/// Monte Carlo crossing-probability estimate, kept separate so the exact CDF
/// path can be cross-checked.
pub fn crossing_probability_monte_carlo(
    c: f64,
    lipschitz: f64,
    density: &BoundedDensity,
    trials: usize,
    seed: u64,
) -> f64 {
    let v_min = lipschitz * c / (lipschitz + c + 1.0);
    let v_max = c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..trials)
        .filter(|_| {
            let v = density.sample(&mut rng);
            (v_min..=v_max).contains(&v)
        })
        .count();
    hits as f64 / trials as f64
}

/// Grid-discretized continuous Exp3-SET for tariff menus under semi-bandit
/// feedback.
///
/// Maintains one weight per grid menu. Each round samples a menu, observes
/// the buyer's choice, identifies the region of grid menus on which the
/// buyer makes the same choice (exactly, through the best-response oracle),
/// and applies the importance-weighted normalized loss
/// `l_hat = 1{rho in region} * l(rho) / p(region)` to that region only.
pub fn run_semibandit_exp3set(
    grid: &[TariffMenu],
    buyers: &[UnitValuation],
    h: f64,
    step: f64,
    seed: u64,
) -> Result<RegretTrace> {
    if grid.is_empty() {
        return Err(Error::Config("semi-bandit needs a nonempty grid".into()));
    }
    if step <= 0.0 {
        return Err(Error::Config("step size must be positive".into()));
    }
    let n = grid.len();
    let mut log_w = vec![0.0_f64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TraceBuilder::new(n, buyers.len());

    for buyer in buyers {
        let max_log = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = log_w.iter().map(|&l| (l - max_log).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let chosen = crate::experts::sample_index(&probs, &mut rng);
        let round = semibandit_round(grid, &probs, buyer, chosen, h)?;
        for (lw, l_hat) in log_w.iter_mut().zip(&round.weighted_loss) {
            *lw -= step * l_hat;
        }
        let played = &round.responses[chosen];
        let gains: Vec<f64> = round.responses.iter().map(|r| r.revenue).collect();
        trace.record(chosen, played.choice, played.revenue, &gains);
    }
    Ok(trace.finish())
}

/// One semi-bandit round given the sampling distribution and the sampled
/// grid index: the buyer's responses on the whole grid, the played menu's
/// region (grid menus sharing the buyer's choice), its probability mass,
/// and the importance-weighted loss `l_hat` applied to that region.
#[derive(Debug, Clone)]
pub struct SemibanditRound {
    pub responses: Vec<crate::mechanisms::BestResponse>,
    pub in_region: Vec<bool>,
    pub region_mass: f64,
    /// `l_hat(rho) = 1{rho in region} * (h - revenue(rho)) / h / region_mass`.
    pub weighted_loss: Vec<f64>,
}

pub fn semibandit_round(
    grid: &[TariffMenu],
    probs: &[f64],
    buyer: &UnitValuation,
    chosen: usize,
    h: f64,
) -> Result<SemibanditRound> {
    let responses = parallel::map_slice(grid, |menu| best_response_tariff(menu, buyer));
    let played_choice = responses[chosen].choice;
    let in_region: Vec<bool> = responses
        .iter()
        .map(|r| r.choice == played_choice)
        .collect();
    let region_mass: f64 = in_region
        .iter()
        .zip(probs)
        .filter(|(m, _)| **m)
        .map(|(_, &p)| p)
        .sum();
    if region_mass < 1e-12 {
        return Err(Error::InvalidConstruction(
            "region probability mass vanished".into(),
        ));
    }
    let weighted_loss: Vec<f64> = responses
        .iter()
        .zip(&in_region)
        .map(|(r, &m)| {
            if m {
                (h - r.revenue) / h / region_mass
            } else {
                0.0
            }
        })
        .collect();
    Ok(SemibanditRound {
        responses,
        in_region,
        region_mass,
        weighted_loss,
    })
}
