//! Revenue-preserving rounding and enumeration of the finite menu covers the
//! learners run over.
//!
//! The tariff rounding deletes Pareto-dominated tariffs, sorts by up-front
//! fee, applies an index-proportional price decrement, and rounds down to
//! the `alpha` grid; the output loses at most `2*K*alpha*ell` revenue against
//! any valuation. The lottery rounding buckets entries into geometric price
//! levels and shrinks allocations of cheaper levels more than their prices,
//! so no buyer switches to a lower-price level.
//!
//! Enumerators yield every grid menu in a deterministic lexicographic order
//! and fail loudly (never truncate) when the grid would exceed the cap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{LotteryEntry, LotteryMenu, Tariff, TariffMenu};
use crate::DEFAULT_ENUMERATION_CAP;

/// Grid comparisons tolerate this much floating-point drift when deciding
/// which multiple of `alpha` a price sits on.
const GRID_EPS: f64 = 1e-9;

/// Largest integer `g` with `g * alpha <= x` (up to drift).
fn grid_index_floor(x: f64, alpha: f64) -> i64 {
    (x / alpha + GRID_EPS).floor() as i64
}

/// Rounds `x` down to a multiple of `alpha`, computed as a product so grid
/// points stay bit-identical.
fn round_down_to_multiple(x: f64, alpha: f64) -> f64 {
    let g = grid_index_floor(x, alpha).max(0);
    g as f64 * alpha
}

/// Parameters of the tariff cover grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TariffCoverParams {
    pub alpha: f64,
    pub h: f64,
    pub max_units: usize,
    pub ell: usize,
}

impl TariffCoverParams {
    pub fn new(alpha: f64, h: f64, max_units: usize, ell: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha == 0.0 {
            return Err(Error::Config(format!(
                "alpha must be in (0,1], got {alpha}"
            )));
        }
        if h <= 0.0 || max_units == 0 || ell == 0 {
            return Err(Error::Config("H, K, and ell must all be positive".into()));
        }
        Ok(TariffCoverParams {
            alpha,
            h,
            max_units,
            ell,
        })
    }

    /// Grid points per price coordinate: `{0, alpha, ..., floor(H/alpha)*alpha}`.
    pub fn grid_points(&self) -> usize {
        grid_index_floor(self.h, self.alpha) as usize + 1
    }

    /// Exact number of menus in the cover.
    pub fn count(&self) -> u128 {
        (self.grid_points() as u128).saturating_pow(2 * self.ell as u32)
    }
}

/// Parameters of the lottery cover grid and of the lottery rounding.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LotteryCoverParams {
    pub alpha: f64,
    pub delta: f64,
    /// Number of geometric price levels (the rounding's `K`).
    pub levels: usize,
    pub items: usize,
    pub h: f64,
    pub ell: usize,
}

impl LotteryCoverParams {
    pub fn new(
        alpha: f64,
        delta: f64,
        levels: usize,
        items: usize,
        h: f64,
        ell: usize,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
            return Err(Error::Config(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::Config(format!(
                "delta must be in (0,1), got {delta}"
            )));
        }
        if levels == 0 || items == 0 || h <= 0.0 {
            return Err(Error::Config("levels, m, and H must be positive".into()));
        }
        Ok(LotteryCoverParams {
            alpha,
            delta,
            levels,
            items,
            h,
            ell,
        })
    }

    /// Exponent cap `K' = floor((1/alpha) * ln(H*m/alpha))` of the allocation
    /// grid `{0} ∪ {(1-alpha)^i : i = 0..=K'}`.
    pub fn power_cap(&self) -> usize {
        let hm = self.h * self.items as f64;
        let k = ((1.0 / self.alpha) * (hm / self.alpha).ln()).floor();
        if k <= 0.0 {
            0
        } else {
            k as usize
        }
    }

    /// Allocation grid values in increasing order.
    pub fn allocation_grid(&self) -> Vec<f64> {
        let kp = self.power_cap();
        let base = 1.0 - self.alpha;
        let mut grid = Vec::with_capacity(kp + 2);
        grid.push(0.0);
        for i in (0..=kp).rev() {
            grid.push(base.powi(i as i32));
        }
        grid
    }

    /// Price grid `{0, Hm*alpha, 2*Hm*alpha, ...}` up to `Hm`.
    pub fn price_grid(&self) -> Vec<f64> {
        let hm = self.h * self.items as f64;
        let step = hm * self.alpha;
        let n = grid_index_floor(1.0, self.alpha).max(0) as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    }

    /// Exact number of menus in the cover.
    pub fn count(&self) -> u128 {
        let per_coord = self.allocation_grid().len() as u128;
        let per_entry = (self.price_grid().len() as u128)
            .saturating_mul(per_coord.saturating_pow(self.items as u32));
        per_entry.saturating_pow(self.ell as u32)
    }
}

/// Almost-revenue-preserving rounding of a tariff menu onto the `alpha` grid.
///
/// Steps: drop Pareto-dominated tariffs, reindex by increasing up-front fee,
/// decrease both fees of tariff `i` by `(i-1)*alpha` (clamped at 0), round
/// both down to multiples of `alpha`, dedupe.
pub fn round_tariff_menu(menu: &TariffMenu, alpha: f64) -> TariffMenu {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    // Pareto frontier: drop exact duplicates (keep first), then tariffs
    // weakly dominated by a distinct survivor.
    let mut frontier: Vec<Tariff> = Vec::new();
    for t in &menu.tariffs {
        if !frontier.iter().any(|f| f == t) {
            frontier.push(*t);
        }
    }
    let kept: Vec<Tariff> = frontier
        .iter()
        .filter(|t| !frontier.iter().any(|o| *o != **t && t.dominated_by(o)))
        .copied()
        .collect();

    let mut sorted = kept;
    sorted.sort_by(|a, b| {
        a.up_front
            .partial_cmp(&b.up_front)
            .unwrap()
            .then(b.per_unit.partial_cmp(&a.per_unit).unwrap())
    });

    let mut out: Vec<Tariff> = Vec::with_capacity(sorted.len());
    for (i, t) in sorted.iter().enumerate() {
        let dec = i as f64 * alpha;
        let p1 = round_down_to_multiple((t.up_front - dec).max(0.0), alpha);
        let p2 = round_down_to_multiple((t.per_unit - dec).max(0.0), alpha);
        let rounded = Tariff::new(p1, p2);
        if !out.contains(&rounded) {
            out.push(rounded);
        }
    }
    TariffMenu::new(out)
}

/// Lazy enumerator of every length-`ell` tariff menu on the `alpha` grid, in
/// lexicographic order over the `2*ell` price coordinates.
#[derive(Debug)]
pub struct TariffCoverIter {
    grid: Vec<f64>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for TariffCoverIter {
    type Item = TariffMenu;

    fn next(&mut self) -> Option<TariffMenu> {
        if self.done {
            return None;
        }
        let tariffs: Vec<Tariff> = self
            .digits
            .chunks(2)
            .map(|d| Tariff::new(self.grid[d[0]], self.grid[d[1]]))
            .collect();
        // Advance the mixed-radix counter, least-significant digit last.
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.grid.len() {
                break;
            }
            self.digits[i] = 0;
        }
        Some(TariffMenu::new(tariffs))
    }
}

/// Enumerates the tariff cover, failing if it exceeds `cap`.
pub fn enumerate_tariff_cover(
    params: &TariffCoverParams,
    cap: Option<u128>,
) -> Result<TariffCoverIter> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let count = params.count();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let grid: Vec<f64> = (0..params.grid_points())
        .map(|i| i as f64 * params.alpha)
        .collect();
    Ok(TariffCoverIter {
        grid,
        digits: vec![0; 2 * params.ell],
        done: false,
    })
}

/// Materialized tariff cover.
pub fn tariff_cover(params: &TariffCoverParams, cap: Option<u128>) -> Result<Vec<TariffMenu>> {
    Ok(enumerate_tariff_cover(params, cap)?.collect())
}

/// Almost-revenue-preserving rounding of a lottery menu.
///
/// Entries with price at or below `m*H*(1-delta)^K` are dropped; level `k`
/// holds prices in `(m*H*(1-delta)^{K-k+1}, m*H*(1-delta)^{K-k}]`.
/// Allocations are scaled by `(1-alpha)^{K-k}` and rounded down into
/// `{0} ∪ {(1-alpha)^i : i = 0..=K'}`; prices are scaled by `(1-alpha)^K`,
/// rounded down to multiples of `alpha`, reduced by `2*k*alpha`, and clamped
/// at 0. The null entry is preserved.
pub fn round_lottery_menu(menu: &LotteryMenu, params: &LotteryCoverParams) -> LotteryMenu {
    let m = menu.items();
    let hm = params.h * m as f64;
    let levels = params.levels as i32;
    let one_minus_delta = 1.0 - params.delta;
    let one_minus_alpha = 1.0 - params.alpha;
    let kp = params.power_cap() as i32;
    let min_alloc = params.alpha / hm;

    let round_alloc = |x: f64| -> f64 {
        if x <= 0.0 || x < min_alloc {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        // Smallest i with (1-alpha)^i <= x; powers shrink as i grows.
        let i = (x.ln() / one_minus_alpha.ln() - GRID_EPS).ceil() as i32;
        let i = i.max(0);
        if i > kp {
            0.0
        } else {
            one_minus_alpha.powi(i)
        }
    };

    let mut out: Vec<LotteryEntry> = Vec::new();
    for entry in &menu.entries()[1..] {
        // Level search: price in (hm*(1-d)^{K-k+1}, hm*(1-d)^{K-k}].
        let mut level = None;
        for k in 1..=levels {
            let lo = hm * one_minus_delta.powi(levels - k + 1);
            let hi = hm * one_minus_delta.powi(levels - k);
            if entry.price > lo && entry.price <= hi {
                level = Some(k);
                break;
            }
        }
        let Some(k) = level else {
            continue; // below level 1: dropped
        };
        let scale = one_minus_alpha.powi(levels - k);
        let phi: Vec<f64> = entry.phi.iter().map(|&p| round_alloc(p * scale)).collect();
        let scaled_price = entry.price * one_minus_alpha.powi(levels);
        let price = (round_down_to_multiple(scaled_price, params.alpha)
            - 2.0 * k as f64 * params.alpha)
            .max(0.0);
        out.push(LotteryEntry::new(phi, price));
    }
    LotteryMenu::new(m, out).expect("rounded entries stay within bounds")
}

/// Lazy enumerator of every length-`ell` lottery menu on the cover grid:
/// prices in `{0, Hm*alpha, ...}` and each allocation coordinate in
/// `{0} ∪ {(1-alpha)^i}`. Deterministic lexicographic order, entry by entry,
/// allocations before price.
#[derive(Debug)]
pub struct LotteryCoverIter {
    alloc_grid: Vec<f64>,
    price_grid: Vec<f64>,
    items: usize,
    ell: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for LotteryCoverIter {
    type Item = LotteryMenu;

    fn next(&mut self) -> Option<LotteryMenu> {
        if self.done {
            return None;
        }
        let per_entry = self.items + 1;
        let entries: Vec<LotteryEntry> = (0..self.ell)
            .map(|e| {
                let d = &self.digits[e * per_entry..(e + 1) * per_entry];
                let phi: Vec<f64> = (0..self.items).map(|i| self.alloc_grid[d[i]]).collect();
                LotteryEntry::new(phi, self.price_grid[d[self.items]])
            })
            .collect();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let radix = if (i + 1).is_multiple_of(per_entry) {
                self.price_grid.len()
            } else {
                self.alloc_grid.len()
            };
            self.digits[i] += 1;
            if self.digits[i] < radix {
                break;
            }
            self.digits[i] = 0;
        }
        if self.digits.is_empty() {
            self.done = true;
        }
        Some(LotteryMenu::new(self.items, entries).expect("grid entries are valid"))
    }
}

/// Enumerates the lottery cover, failing if it exceeds `cap`.
pub fn enumerate_lottery_cover(
    params: &LotteryCoverParams,
    cap: Option<u128>,
) -> Result<LotteryCoverIter> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let count = params.count();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    Ok(LotteryCoverIter {
        alloc_grid: params.allocation_grid(),
        price_grid: params.price_grid(),
        items: params.items,
        ell: params.ell,
        digits: vec![0; params.ell * (params.items + 1)],
        done: false,
    })
}

/// Materialized lottery cover.
pub fn lottery_cover(params: &LotteryCoverParams, cap: Option<u128>) -> Result<Vec<LotteryMenu>> {
    Ok(enumerate_lottery_cover(params, cap)?.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn round_tariff_hand_example() {
        let menu = TariffMenu::from_pairs(&[(0.13, 0.27), (0.31, 0.12)]);
        let out = round_tariff_menu(&menu, 0.1);
        assert_eq!(out.len(), 2);
        assert_abs_diff_eq!(out.tariffs[0].up_front, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tariffs[0].per_unit, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tariffs[1].up_front, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tariffs[1].per_unit, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn round_tariff_single_on_grid_is_fixed() {
        let menu = TariffMenu::from_pairs(&[(0.2, 0.4)]);
        let out = round_tariff_menu(&menu, 0.1);
        assert_eq!(out.tariffs, menu.tariffs);
    }

    #[test]
    fn round_tariff_drops_dominated() {
        let menu = TariffMenu::from_pairs(&[(0.1, 0.2), (0.3, 0.2)]);
        let out = round_tariff_menu(&menu, 0.1);
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out.tariffs[0].up_front, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(out.tariffs[0].per_unit, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn round_tariff_keeps_one_duplicate() {
        let menu = TariffMenu::from_pairs(&[(0.2, 0.2), (0.2, 0.2)]);
        let out = round_tariff_menu(&menu, 0.1);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn round_tariff_idempotent_on_grid_single() {
        // Cover closure for ell = 1: zero decrement and on-grid prices.
        for &alpha in &[0.1, 0.05, 0.2] {
            let params = TariffCoverParams::new(alpha, 1.0, 2, 1).unwrap();
            for menu in tariff_cover(&params, None).unwrap() {
                let rounded = round_tariff_menu(&menu, alpha);
                assert_eq!(rounded.tariffs, menu.tariffs, "alpha={alpha}");
            }
        }
    }

    #[test]
    fn tariff_cover_counts() {
        let p = TariffCoverParams::new(0.5, 1.0, 1, 1).unwrap();
        assert_eq!(p.count(), 9);
        assert_eq!(tariff_cover(&p, None).unwrap().len(), 9);

        let p = TariffCoverParams::new(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(p.count(), 4); // grid {0, 1} per coordinate
        assert_eq!(tariff_cover(&p, None).unwrap().len(), 4);

        let p = TariffCoverParams::new(0.5, 1.0, 1, 2).unwrap();
        assert_eq!(p.count(), 81);
        assert_eq!(tariff_cover(&p, None).unwrap().len(), 81);
    }

    #[test]
    fn tariff_cover_cap_errors_with_count() {
        let p = TariffCoverParams::new(0.01, 1.0, 1, 3).unwrap();
        match enumerate_tariff_cover(&p, Some(1000)) {
            Err(Error::EnumerationTooLarge { count, cap }) => {
                assert_eq!(cap, 1000);
                assert_eq!(count, 101u128.pow(6));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn tariff_cover_order_is_deterministic() {
        let p = TariffCoverParams::new(0.5, 1.0, 1, 1).unwrap();
        let a = tariff_cover(&p, None).unwrap();
        let b = tariff_cover(&p, None).unwrap();
        assert_eq!(a, b);
        // First menu is all zeros, last is all max.
        assert_eq!(a[0].tariffs[0], Tariff::new(0.0, 0.0));
        assert_eq!(a[8].tariffs[0], Tariff::new(1.0, 1.0));
    }

    fn lottery_params_example() -> LotteryCoverParams {
        LotteryCoverParams::new(0.05, 0.1, 2, 1, 1.0, 1).unwrap()
    }

    #[test]
    fn round_lottery_hand_example() {
        let menu = LotteryMenu::new(1, vec![LotteryEntry::new(vec![1.0], 0.9)]).unwrap();
        let out = round_lottery_menu(&menu, &lottery_params_example());
        assert_eq!(out.len(), 1);
        let e = &out.entries()[1];
        assert_abs_diff_eq!(e.phi[0], 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(e.price, 0.70, epsilon = 1e-12);
    }

    #[test]
    fn round_lottery_null_only() {
        let menu = LotteryMenu::new(1, vec![]).unwrap();
        let out = round_lottery_menu(&menu, &lottery_params_example());
        assert_eq!(out.len(), 0);
    }

    #[test]
    fn round_lottery_drops_below_min_price() {
        // price 0.5 <= mH(1-delta)^K = 0.81 is dropped.
        let menu = LotteryMenu::new(1, vec![LotteryEntry::new(vec![0.5], 0.5)]).unwrap();
        let out = round_lottery_menu(&menu, &lottery_params_example());
        assert_eq!(out.len(), 0);
    }

    #[test]
    fn round_lottery_boundary_price_dropped() {
        // price exactly mH(1-delta)^K sits below level 1's open lower bound.
        let menu = LotteryMenu::new(1, vec![LotteryEntry::new(vec![0.9], 0.81)]).unwrap();
        let out = round_lottery_menu(&menu, &lottery_params_example());
        assert_eq!(out.len(), 0);
    }

    #[test]
    fn lottery_cover_counts() {
        let p = LotteryCoverParams::new(0.5, 0.1, 2, 1, 1.0, 1).unwrap();
        assert_eq!(p.power_cap(), 1); // floor(2 ln 2)
        assert_eq!(p.allocation_grid(), vec![0.0, 0.5, 1.0]);
        assert_eq!(p.price_grid().len(), 3);
        assert_eq!(p.count(), 9);
        assert_eq!(lottery_cover(&p, None).unwrap().len(), 9);

        let p = LotteryCoverParams::new(0.99, 0.1, 2, 1, 1.0, 1).unwrap();
        assert_eq!(p.power_cap(), 0);
        assert_eq!(p.allocation_grid(), vec![0.0, 1.0]);
        assert_eq!(p.count(), p.price_grid().len() as u128 * 2);

        let p = LotteryCoverParams::new(0.5, 0.1, 2, 1, 1.0, 0).unwrap();
        let menus = lottery_cover(&p, None).unwrap();
        assert_eq!(menus.len(), 1);
        assert_eq!(menus[0].len(), 0); // the null-only menu
    }

    #[test]
    fn example_one_menu_respects_rounding_bound() {
        // The menu whose naive roundings misbehave: the level rounding's
        // output must still satisfy its revenue bound for the 0.6-value
        // buyer, for several parameter choices.
        use crate::mechanisms::{best_response_lottery, DemandKind, ItemValuation};
        let menu = LotteryMenu::new(
            1,
            vec![
                LotteryEntry::new(vec![0.26], 0.24),
                LotteryEntry::new(vec![0.95], 0.52),
            ],
        )
        .unwrap();
        let buyer = ItemValuation::new(vec![0.6], DemandKind::Additive, 1.0).unwrap();
        let before = best_response_lottery(&menu, &buyer).unwrap().revenue;
        assert_eq!(before, 0.52);
        for (alpha, delta, levels) in [(0.05, 0.1, 2), (0.02, 0.05, 3), (0.1, 0.2, 1)] {
            let params = LotteryCoverParams::new(alpha, delta, levels, 1, 1.0, 2).unwrap();
            let rounded = round_lottery_menu(&menu, &params);
            let after = best_response_lottery(&rounded, &buyer).unwrap().revenue;
            let k = levels as f64;
            let bound = before * (1.0 - delta) * (1.0 - alpha).powf(k)
                - (2.0 * k + 1.0) * alpha
                - (1.0 - delta).powf(k);
            assert!(
                after >= bound,
                "alpha={alpha} delta={delta} K={levels}: {after} < {bound}"
            );
        }
    }

    #[test]
    fn lottery_cover_cap_errors() {
        let p = LotteryCoverParams::new(0.01, 0.01, 3, 2, 1.0, 2).unwrap();
        assert!(matches!(
            enumerate_lottery_cover(&p, Some(100)),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn grid_rounding_is_exact_on_awkward_values() {
        // 0.3 / 0.1 = 2.9999999999999996 must still land on 0.3.
        assert_abs_diff_eq!(round_down_to_multiple(0.3, 0.1), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(round_down_to_multiple(0.29, 0.1), 0.2, epsilon = 1e-15);
        assert_eq!(round_down_to_multiple(0.0, 0.1), 0.0);
    }
}
