//! Block-structured partial-information learner for limited buyer types.
//!
//! Time splits into `Z` blocks. Each block hides `V` uniformly random
//! exploration slots: at slot `i` the menu of spanner vector `pi(i)`'s region
//! is played and a single 0/1 observation records whether the buyer took
//! that vector's option. Every other round exploits by sampling from the
//! current weighted-majority distribution over the extreme-point menus. At
//! block end the spanner observations yield an unbiased bounded-range
//! estimate of every extreme point's block-average revenue, which feeds the
//! weighted-majority update as a full-information gain vector.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::geometry::{enumerate_extreme_points, ExtremePointSet};
use super::model::{OptionModel, TypeSet};
use super::spanner::{barycentric_spanner, build_indicator_set, IndicatorVector, SpannerBasis};
use crate::error::{Error, Result};
use crate::experts::{wm_select, wm_update_full, ExpertState, RegretTrace, TraceBuilder};
use crate::mechanisms::Choice;

/// Everything the online loop needs, computed once per instance.
#[derive(Debug, Clone)]
pub struct LimitedPrecomputation {
    pub(crate) model: OptionModel,
    pub(crate) types: TypeSet,
    pub extreme_points: ExtremePointSet,
    pub indicators: Vec<IndicatorVector>,
    pub spanner: SpannerBasis,
    /// Expert (extreme-point) index whose menu is played when exploring each
    /// spanner vector.
    pub spanner_expert: Vec<usize>,
    /// The option observed for each spanner vector.
    pub spanner_option: Vec<Choice>,
    /// Per expert: `(price at this menu, indicator index)` for every option
    /// appearing in its region's mapping.
    pub expert_terms: Vec<Vec<(f64, usize)>>,
    /// Per expert per type: exact revenue (used for traces and oracles).
    pub revenue_matrix: Vec<Vec<f64>>,
    /// Estimator range bound: `C * ellKVH` (tariffs) or `C * mH(ell+1)V`.
    pub estimate_bound: f64,
    /// Exact per-instance range of the estimates: the maximum over experts
    /// of `sum_o price(o) * sum_i |lambda_i|`. Always at most
    /// `estimate_bound`; normalizing the weight updates by this instead of
    /// the worst case keeps the learning rate matched to the instance.
    pub realized_bound: f64,
    /// `|O|` entering the block-count formula.
    pub option_cardinality: usize,
}

impl LimitedPrecomputation {
    pub fn experts(&self) -> usize {
        self.extreme_points.points.len()
    }

    /// Number of time blocks `Z = round((T^2 |O|^2 V ln(|O| V))^(1/3))`,
    /// at least 1.
    pub fn blocks(&self, rounds: usize) -> usize {
        let t = rounds as f64;
        let o = self.option_cardinality as f64;
        let v = self.types.len() as f64;
        let z = (t * t * o * o * v * (o * v).ln().max(1.0)).powf(1.0 / 3.0);
        (z.round() as usize).max(1)
    }
}

/// Builds regions, extreme points, indicators, and the spanner for a type
/// set.
pub fn precompute(
    types: &TypeSet,
    ell: usize,
    epsilon: f64,
    spanner_c: f64,
    cap: Option<u128>,
) -> Result<LimitedPrecomputation> {
    let model = OptionModel::build(types, ell)?;
    let extreme_points = enumerate_extreme_points(types, ell, epsilon, cap)?;
    if extreme_points.points.is_empty() {
        return Err(Error::InvalidConstruction(
            "no extreme-point menus were certified".into(),
        ));
    }
    let indicators = build_indicator_set(&extreme_points.regions);
    let spanner = barycentric_spanner(&indicators, spanner_c)?;

    let spanner_expert: Vec<usize> = spanner
        .vectors
        .iter()
        .map(|&iv| {
            let region = indicators[iv].region;
            extreme_points
                .points
                .iter()
                .position(|p| p.region == region)
                .expect("every region discovered has a representative point")
        })
        .collect();
    let spanner_option: Vec<Choice> = spanner
        .vectors
        .iter()
        .map(|&iv| indicators[iv].option)
        .collect();

    let lookup_indicator = |region: usize, option: &Choice| -> usize {
        let bits: Vec<bool> = extreme_points.regions[region]
            .mapping
            .assignment
            .iter()
            .map(|c| c == option)
            .collect();
        indicators
            .iter()
            .position(|iv| iv.bits == bits)
            .expect("indicator set covers all (region, option) pairs")
    };

    let expert_terms: Vec<Vec<(f64, usize)>> = extreme_points
        .points
        .iter()
        .map(|p| {
            let mut seen: Vec<Choice> = Vec::new();
            let mut terms = Vec::new();
            for choice in &extreme_points.regions[p.region].mapping.assignment {
                if seen.contains(choice) {
                    continue;
                }
                seen.push(*choice);
                let opt = model.option_index(choice).expect("option exists");
                let price = model.price_at(opt, &p.params);
                if price.abs() > 0.0 {
                    terms.push((price, lookup_indicator(p.region, choice)));
                }
            }
            terms
        })
        .collect();

    let revenue_matrix: Vec<Vec<f64>> = extreme_points
        .points
        .iter()
        .map(|p| {
            (0..types.len())
                .map(|ti| model.best_response_at(types, ti, &p.params).revenue)
                .collect()
        })
        .collect();

    let v = types.len() as f64;
    let h = types.cap();
    let paper_bound = if model.is_tariff() {
        ell as f64 * types.inner_dim() as f64 * v * h
    } else {
        types.inner_dim() as f64 * h * (ell as f64 + 1.0) * v
    };
    let estimate_bound = paper_bound * spanner.approximation_c.max(1.0);
    let realized_bound = expert_terms
        .iter()
        .map(|terms| {
            terms
                .iter()
                .map(|&(price, iv)| {
                    price
                        * spanner.coefficients[iv]
                            .iter()
                            .map(|c| c.abs())
                            .sum::<f64>()
                })
                .sum::<f64>()
        })
        .fold(0.0_f64, f64::max)
        .max(1e-9);

    Ok(LimitedPrecomputation {
        option_cardinality: model.option_cardinality,
        model,
        types: types.clone(),
        extreme_points,
        indicators,
        spanner,
        spanner_expert,
        spanner_option,
        expert_terms,
        revenue_matrix,
        estimate_bound,
        realized_bound,
    })
}

/// Revenue estimates for every expert from one block's spanner observations:
/// `u_hat(rho) = sum_o price(o, rho) * sum_i lambda_i(I_{mu_rho,o}) f_hat(s_i)`.
fn estimates_from_observations(pre: &LimitedPrecomputation, f_hat: &[f64]) -> Vec<f64> {
    pre.expert_terms
        .iter()
        .map(|terms| {
            terms
                .iter()
                .map(|&(price, iv)| {
                    let coefs = &pre.spanner.coefficients[iv];
                    let inner: f64 = coefs.iter().zip(f_hat).map(|(c, f)| c * f).sum();
                    price * inner
                })
                .sum()
        })
        .collect()
}

/// One block's exploration simulation, exposed for the estimator tests:
/// draws the permutation and slots, plays the spanner menus against the
/// corresponding arrivals, and returns `(f_hat, u_hat)`.
pub fn simulate_block_estimates(
    pre: &LimitedPrecomputation,
    block_types: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let v = pre.types.len();
    assert!(block_types.len() >= v, "block shorter than the spanner");
    let mut perm: Vec<usize> = (0..v).collect();
    perm.shuffle(rng);
    let slots = distinct_slots(block_types.len(), v, rng);
    let mut f_hat = vec![0.0; v];
    for (i, &slot) in slots.iter().enumerate() {
        let s = perm[i];
        let expert = pre.spanner_expert[s];
        let point = &pre.extreme_points.points[expert].params;
        let buyer = block_types[slot];
        let br = pre.model.best_response_at(&pre.types, buyer, point);
        f_hat[s] = if br.choice == pre.spanner_option[s] {
            1.0
        } else {
            0.0
        };
    }
    let u_hat = estimates_from_observations(pre, &f_hat);
    (f_hat, u_hat)
}

/// Exact `f_tau / block_len` for each spanner vector on a block: the
/// fraction of arrivals whose type the vector indicates.
pub fn exact_block_frequencies(pre: &LimitedPrecomputation, block_types: &[usize]) -> Vec<f64> {
    let len = block_types.len() as f64;
    pre.spanner
        .vectors
        .iter()
        .map(|&iv| {
            let bits = &pre.indicators[iv].bits;
            block_types.iter().filter(|&&t| bits[t]).count() as f64 / len
        })
        .collect()
}

fn distinct_slots(block_len: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Floyd's algorithm; marginals stay uniform over the block.
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for j in (block_len - count)..block_len {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.shuffle(rng);
    chosen
}

/// Runs the block-structured partial-information learner over a sequence of
/// type indices. `beta` defaults to `2 sqrt(ln|R| / Z)`.
pub fn run_limited_bandit(
    pre: &LimitedPrecomputation,
    type_sequence: &[usize],
    beta: Option<f64>,
    seed: u64,
) -> Result<RegretTrace> {
    let rounds = type_sequence.len();
    let v = pre.types.len();
    let z = pre.blocks(rounds);
    let block_len = rounds / z;
    if block_len < v {
        return Err(Error::BlockTooShort {
            rounds,
            block_len,
            explorations: v,
        });
    }
    let n_experts = pre.experts();
    // Default learning rate for Z full-information updates over n experts;
    // the factor 2 compensates the halving from the gain shift below.
    let beta = beta
        .unwrap_or(2.0 * ((n_experts as f64).ln().max(1.0) / z as f64).sqrt())
        .clamp(1e-6, 1.0);
    // Estimates are signed; feeding (u_hat + bound)/2 keeps the weighted
    // majority gains in [0, bound] without changing its distribution. The
    // exact per-instance range keeps the update scale honest where the
    // worst-case bound is loose.
    let cap = pre.realized_bound.min(pre.estimate_bound);
    let mut state = ExpertState::new(n_experts, beta, None, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TraceBuilder::new(n_experts, rounds);

    let play = |expert: usize, global_t: usize, trace: &mut TraceBuilder| {
        let buyer = type_sequence[global_t];
        let point = &pre.extreme_points.points[expert].params;
        let br = pre.model.best_response_at(&pre.types, buyer, point);
        let counterfactual: Vec<f64> = pre.revenue_matrix.iter().map(|row| row[buyer]).collect();
        trace.record(expert, br.choice, br.revenue, &counterfactual);
        br
    };

    for block in 0..z {
        let start = block * block_len;
        let mut perm: Vec<usize> = (0..v).collect();
        perm.shuffle(&mut rng);
        let slots = distinct_slots(block_len, v, &mut rng);
        let slot_of: Vec<Option<usize>> = {
            let mut map = vec![None; block_len];
            for (i, &s) in slots.iter().enumerate() {
                map[s] = Some(i);
            }
            map
        };
        let mut f_hat = vec![0.0; v];
        for (local_t, slot) in slot_of.iter().enumerate() {
            let global_t = start + local_t;
            if let Some(i) = *slot {
                let s = perm[i];
                let expert = pre.spanner_expert[s];
                let br = play(expert, global_t, &mut trace);
                f_hat[s] = if br.choice == pre.spanner_option[s] {
                    1.0
                } else {
                    0.0
                };
            } else {
                let expert = wm_select(&state, &mut rng);
                play(expert, global_t, &mut trace);
            }
        }
        let u_hat = estimates_from_observations(pre, &f_hat);
        let gains: Vec<f64> = u_hat
            .iter()
            .map(|&u| {
                debug_assert!(u.abs() <= cap * (1.0 + 1e-9), "estimate {u} exceeds {cap}");
                ((u + cap) / 2.0).clamp(0.0, cap)
            })
            .collect();
        wm_update_full(&mut state, &gains)?;
    }
    // Trailing partial block: exploit only, no further updates.
    for global_t in z * block_len..rounds {
        let expert = wm_select(&state, &mut rng);
        play(expert, global_t, &mut trace);
    }
    Ok(trace.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::UnitValuation;

    fn small_instance() -> LimitedPrecomputation {
        let types = TypeSet::unit(vec![
            UnitValuation::new(vec![0.0, 0.55, 0.8], 1.0).unwrap(),
            UnitValuation::new(vec![0.0, 0.25, 0.45], 1.0).unwrap(),
            UnitValuation::new(vec![0.0, 0.7, 0.75], 1.0).unwrap(),
        ])
        .unwrap();
        precompute(&types, 1, 0.05, 2.0, None).unwrap()
    }

    #[test]
    fn precompute_produces_spanner_and_experts() {
        let pre = small_instance();
        assert!(pre.experts() > 0);
        assert!(!pre.indicators.is_empty());
        assert!(pre.spanner.approximation_c <= 2.0 + 1e-9);
        assert_eq!(pre.option_cardinality, 3); // ell * (K+1) = 1 * 3
    }

    #[test]
    fn estimator_unbiased_over_slot_resamples() {
        let pre = small_instance();
        // Fixed block of arrivals.
        let block: Vec<usize> = (0..40).map(|t| [0, 1, 2, 0, 1][t % 5]).collect();
        let exact = exact_block_frequencies(&pre, &block);
        let resamples = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let v = pre.types.len();
        let mut mean_f = vec![0.0; v];
        for _ in 0..resamples {
            let (f_hat, _) = simulate_block_estimates(&pre, &block, &mut rng);
            for (m, f) in mean_f.iter_mut().zip(&f_hat) {
                *m += f;
            }
        }
        for m in &mut mean_f {
            *m /= resamples as f64;
        }
        for (i, (&m, &e)) in mean_f.iter().zip(&exact).enumerate() {
            // Bernoulli standard error.
            let se = (e * (1.0 - e) / resamples as f64).sqrt().max(1e-4);
            assert!(
                (m - e).abs() <= 4.0 * se,
                "spanner vector {i}: mean {m} vs exact {e} (se {se})"
            );
        }
    }

    #[test]
    fn estimates_never_exceed_bound() {
        let pre = small_instance();
        let block: Vec<usize> = (0..30).map(|t| t % 3).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (_, u_hat) = simulate_block_estimates(&pre, &block, &mut rng);
            for &u in &u_hat {
                assert!(u.abs() <= pre.estimate_bound + 1e-9);
            }
        }
    }

    #[test]
    fn single_type_estimates_are_deterministic_revenues() {
        // With V = 1 the spanner observation is deterministic: f_hat = 1 for
        // the arriving type, so u_hat equals each expert's exact revenue.
        let types = TypeSet::unit(vec![UnitValuation::new(vec![0.0, 0.6], 1.0).unwrap()]).unwrap();
        let pre = precompute(&types, 1, 0.05, 2.0, None).unwrap();
        let block = vec![0usize; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, u_hat) = simulate_block_estimates(&pre, &block, &mut rng);
        for (e, &u) in u_hat.iter().enumerate() {
            let exact = pre.revenue_matrix[e][0];
            assert!(
                (u - exact).abs() < 1e-9,
                "expert {e}: estimate {u} vs exact {exact}"
            );
        }
    }

    #[test]
    fn run_produces_full_trace_and_is_reproducible() {
        let pre = small_instance();
        let seq: Vec<usize> = (0..2048).map(|t| [0, 2, 1, 0][t % 4]).collect();
        let a = run_limited_bandit(&pre, &seq, None, 42).unwrap();
        let b = run_limited_bandit(&pre, &seq, None, 42).unwrap();
        assert_eq!(a.rows.len(), 2048);
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn block_too_short_is_an_error() {
        let pre = small_instance();
        let seq = vec![0usize; 4];
        assert!(matches!(
            run_limited_bandit(&pre, &seq, None, 1),
            Err(Error::BlockTooShort { .. })
        ));
    }
}
