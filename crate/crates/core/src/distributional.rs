//! Distributional (sample-based) learning: empirical risk minimization over
//! the discretized covers, plus the sample-complexity calculators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;

/// Kahan-compensated sum; keeps empirical means stable so argmax ties do not
/// depend on platform-specific accumulation order.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Returns the cover menu maximizing average revenue on the samples, its
/// index in enumeration order, and its empirical mean revenue. Ties resolve
/// to the first menu in enumeration order.
pub fn erm_over_cover<M, B, F>(samples: &[B], cover: &[M], revenue: F) -> Result<(usize, f64)>
where
    M: Sync,
    B: Sync,
    F: Fn(&M, &B) -> f64 + Sync + Send,
{
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if cover.is_empty() {
        return Err(Error::Config("ERM needs a nonempty cover".into()));
    }
    let n = samples.len() as f64;
    let means = parallel::map_slice(cover, |menu| {
        compensated_sum(samples.iter().map(|s| revenue(menu, s))) / n
    });
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    Ok((best, means[best]))
}

/// Sample count sufficient for `(epsilon, delta)`-learning length-`ell`
/// tariff menus over the discretized cover:
/// `ceil( (H^2 / 2 eps^2) * (2 ell ln(2 K H ell / eps) + ln(2/delta)) )`.
pub fn sample_complexity_tariff(
    epsilon: f64,
    delta: f64,
    h: f64,
    max_units: usize,
    ell: usize,
) -> usize {
    assert!(epsilon > 0.0 && epsilon < h, "need 0 < epsilon < H");
    assert!(delta > 0.0 && delta < 1.0);
    let k = max_units as f64;
    let l = ell as f64;
    let n = h * h / (2.0 * epsilon * epsilon)
        * (2.0 * l * (2.0 * k * h * l / epsilon).ln() + (2.0 / delta).ln());
    n.ceil().max(1.0) as usize
}

/// Sample-complexity output for lottery menus, including the cover
/// parameters the bound induces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LotterySampleComplexity {
    pub samples: usize,
    /// Discretization pitch for the cover.
    pub alpha: f64,
    /// Level-decay parameter fed to the rounding as its delta.
    pub level_delta: f64,
    /// Number of geometric price levels.
    pub levels: usize,
    /// The internal target `epsilon' = epsilon / 4`.
    pub epsilon_prime: f64,
}

/// Sample count for `(epsilon, delta)`-learning length-`ell` lottery menus,
/// following the parameter chain `eps' = eps/4`,
/// `alpha = eps' / (2 m^2 H^2 ln(mH/eps'))`, `d = eps' / (2mH)`,
/// `K = (2mH/eps') ln(mH/eps')`, and
/// `N = ceil( (m^2 H^2 / 2 eps'^2) * (ell m (ln(1/alpha) + ln ln(mH/alpha)) + ln(2/delta)) )`.
///
/// The iterated logarithm is taken on `mH/alpha` (the quantity the cover size
/// actually depends on) so the formula stays finite at `mH = 1`.
pub fn sample_complexity_lottery(
    epsilon: f64,
    delta: f64,
    h: f64,
    items: usize,
    ell: usize,
) -> LotterySampleComplexity {
    assert!(epsilon > 0.0 && delta > 0.0 && delta < 1.0);
    let m = items as f64;
    let mh = m * h;
    let eps_p = epsilon / 4.0;
    let log_term = (mh / eps_p).ln().max(1.0);
    let alpha = (eps_p / (2.0 * m * m * h * h * log_term)).min(0.5);
    let level_delta = (eps_p / (2.0 * mh)).min(0.5);
    let levels = ((2.0 * mh / eps_p) * log_term).ceil().max(1.0) as usize;
    let ln_ln = (mh / alpha).ln().ln().max(0.0);
    let n = m * m * h * h / (2.0 * eps_p * eps_p)
        * ((ell as f64) * m * ((1.0 / alpha).ln() + ln_ln) + (2.0 / delta).ln());
    LotterySampleComplexity {
        samples: n.ceil().max(1.0) as usize,
        alpha,
        level_delta,
        levels,
        epsilon_prime: eps_p,
    }
}
