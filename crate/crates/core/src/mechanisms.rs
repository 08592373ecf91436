//! Domain types for both mechanism families, buyer best-response oracles,
//! and revenue evaluation.
//!
//! A menu of two-part tariffs offers `ell` pairs `(p1, p2)`; a buyer with
//! unit valuations `v(1..=K)` either buys `k` units under tariff `j`, paying
//! `p1 + k*p2`, or buys nothing. A menu of lotteries offers allocation
//! vectors with prices; the null lottery (free, allocates nothing) is always
//! entry 0.
//!
//! Tie-breaking is seller-favorable throughout: among utility-maximizing
//! options (absolute tolerance [`crate::TIE_TOL`]) the buyer takes
//! the highest-revenue one, remaining ties resolve to the lexicographically
//! smallest option with no-purchase ordered last. This makes revenue
//! upper-semicontinuous in the menu parameters, which the rounding
//! guarantees in [`cover`](crate::cover) rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TIE_TOL;

/// Buyer type for the multi-unit (two-part tariff) family.
///
/// `values[k]` is the buyer's value for `k` units; `values[0] == 0`, entries
/// are nondecreasing and within `[0, H]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnitValuationRaw", into = "UnitValuationRaw")]
pub struct UnitValuation {
    values: Vec<f64>,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct UnitValuationRaw {
    values: Vec<f64>,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "K")]
    k: usize,
}

impl TryFrom<UnitValuationRaw> for UnitValuation {
    type Error = Error;
    fn try_from(raw: UnitValuationRaw) -> Result<Self> {
        if raw.values.len() != raw.k + 1 {
            return Err(Error::InvalidValuation(format!(
                "values has length {}, expected K+1 = {}",
                raw.values.len(),
                raw.k + 1
            )));
        }
        UnitValuation::new(raw.values, raw.h)
    }
}

impl From<UnitValuation> for UnitValuationRaw {
    fn from(v: UnitValuation) -> Self {
        let k = v.max_units();
        UnitValuationRaw {
            values: v.values,
            h: v.h,
            k,
        }
    }
}

impl UnitValuation {
    /// Builds a valuation from `values = (v(0), v(1), ..., v(K))`.
    pub fn new(values: Vec<f64>, h: f64) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::InvalidValuation(format!(
                "H must be positive, got {h}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidValuation(
                "need at least v(0) and v(1)".into(),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidValuation(format!(
                "v(0) must be exactly 0, got {}",
                values[0]
            )));
        }
        for (k, w) in values.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::InvalidValuation(format!(
                    "values must be nondecreasing: v({}) = {} > v({}) = {}",
                    k,
                    w[0],
                    k + 1,
                    w[1]
                )));
            }
        }
        if values.iter().any(|&v| !(0.0..=h).contains(&v)) {
            return Err(Error::InvalidValuation(format!(
                "values must lie in [0, {h}]"
            )));
        }
        Ok(UnitValuation { values, h })
    }

    /// Value for `k` units (`k <= K`).
    pub fn value(&self, units: usize) -> f64 {
        self.values[units]
    }

    pub fn max_units(&self) -> usize {
        self.values.len() - 1
    }

    pub fn cap(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Demand structure of a multi-item buyer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandKind {
    Additive,
    UnitDemand,
}

/// Buyer type for the multi-item (lottery) family: a value per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ItemValuationRaw", into = "ItemValuationRaw")]
pub struct ItemValuation {
    item_values: Vec<f64>,
    demand: DemandKind,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct ItemValuationRaw {
    item_values: Vec<f64>,
    #[serde(rename = "H")]
    h: f64,
    #[serde(default = "default_demand")]
    demand: DemandKind,
}

fn default_demand() -> DemandKind {
    DemandKind::Additive
}

impl TryFrom<ItemValuationRaw> for ItemValuation {
    type Error = Error;
    fn try_from(raw: ItemValuationRaw) -> Result<Self> {
        ItemValuation::new(raw.item_values, raw.demand, raw.h)
    }
}

impl From<ItemValuation> for ItemValuationRaw {
    fn from(v: ItemValuation) -> Self {
        ItemValuationRaw {
            item_values: v.item_values,
            h: v.h,
            demand: v.demand,
        }
    }
}

impl ItemValuation {
    pub fn new(item_values: Vec<f64>, demand: DemandKind, h: f64) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::InvalidValuation(format!(
                "H must be positive, got {h}"
            )));
        }
        if item_values.is_empty() {
            return Err(Error::InvalidValuation("need at least one item".into()));
        }
        if item_values.iter().any(|&v| !(0.0..=h).contains(&v)) {
            return Err(Error::InvalidValuation(format!(
                "item values must lie in [0, {h}]"
            )));
        }
        Ok(ItemValuation {
            item_values,
            demand,
            h,
        })
    }

    pub fn item_values(&self) -> &[f64] {
        &self.item_values
    }

    pub fn items(&self) -> usize {
        self.item_values.len()
    }

    pub fn demand(&self) -> DemandKind {
        self.demand
    }

    pub fn cap(&self) -> f64 {
        self.h
    }
}

/// One two-part tariff: an up-front fee plus a per-unit fee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Tariff {
    pub up_front: f64,
    pub per_unit: f64,
}

impl From<[f64; 2]> for Tariff {
    fn from(p: [f64; 2]) -> Self {
        Tariff {
            up_front: p[0],
            per_unit: p[1],
        }
    }
}

impl From<Tariff> for [f64; 2] {
    fn from(t: Tariff) -> Self {
        [t.up_front, t.per_unit]
    }
}

impl Tariff {
    pub fn new(up_front: f64, per_unit: f64) -> Self {
        Tariff { up_front, per_unit }
    }

    /// Total payment for `k >= 1` units.
    pub fn price(&self, units: usize) -> f64 {
        self.up_front + units as f64 * self.per_unit
    }

    /// Weak Pareto domination: `other` is at least as cheap on both fees.
    pub fn dominated_by(&self, other: &Tariff) -> bool {
        other.up_front <= self.up_front && other.per_unit <= self.per_unit
    }
}

/// An ordered menu of two-part tariffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffMenu {
    pub tariffs: Vec<Tariff>,
}

impl TariffMenu {
    pub fn new(tariffs: Vec<Tariff>) -> Self {
        TariffMenu { tariffs }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        TariffMenu {
            tariffs: pairs.iter().map(|&(a, b)| Tariff::new(a, b)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tariffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tariffs.is_empty()
    }

    /// Checks all prices lie in `[0, h]`.
    pub fn validate(&self, h: f64) -> Result<()> {
        for (i, t) in self.tariffs.iter().enumerate() {
            if !(0.0..=h).contains(&t.up_front) || !(0.0..=h).contains(&t.per_unit) {
                return Err(Error::InvalidMenu(format!(
                    "tariff {} = ({}, {}) outside [0, {h}]",
                    i + 1,
                    t.up_front,
                    t.per_unit
                )));
            }
        }
        Ok(())
    }
}

/// One lottery: per-item allocation probabilities and a price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryEntry {
    pub phi: Vec<f64>,
    pub price: f64,
}

impl LotteryEntry {
    pub fn new(phi: Vec<f64>, price: f64) -> Self {
        LotteryEntry { phi, price }
    }

    pub fn null(items: usize) -> Self {
        LotteryEntry {
            phi: vec![0.0; items],
            price: 0.0,
        }
    }

    pub fn is_null(&self) -> bool {
        self.price == 0.0 && self.phi.iter().all(|&p| p == 0.0)
    }
}

/// A menu of lotteries. Entry 0 is always the null lottery (free, allocates
/// nothing); `ell` counts the priced entries only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LotteryMenuRaw", into = "LotteryMenuRaw")]
pub struct LotteryMenu {
    entries: Vec<LotteryEntry>,
}

#[derive(Serialize, Deserialize)]
struct LotteryMenuRaw {
    entries: Vec<LotteryEntry>,
}

impl TryFrom<LotteryMenuRaw> for LotteryMenu {
    type Error = Error;
    fn try_from(raw: LotteryMenuRaw) -> Result<Self> {
        LotteryMenu::from_entries_with_null(raw.entries)
    }
}

impl From<LotteryMenu> for LotteryMenuRaw {
    fn from(m: LotteryMenu) -> Self {
        LotteryMenuRaw { entries: m.entries }
    }
}

impl LotteryMenu {
    /// Builds a menu from the priced entries; the null entry is prepended.
    pub fn new(items: usize, priced: Vec<LotteryEntry>) -> Result<Self> {
        let mut entries = Vec::with_capacity(priced.len() + 1);
        entries.push(LotteryEntry::null(items));
        entries.extend(priced);
        let menu = LotteryMenu { entries };
        menu.check_shape(items)?;
        Ok(menu)
    }

    /// Builds a menu from a full entry list whose first entry must be null.
    pub fn from_entries_with_null(entries: Vec<LotteryEntry>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidMenu("lottery menu has no entries".into()));
        };
        if !first.is_null() {
            return Err(Error::InvalidMenu(
                "entry 0 must be the null lottery (zero allocations, price 0)".into(),
            ));
        }
        let items = first.phi.len();
        let menu = LotteryMenu { entries };
        menu.check_shape(items)?;
        Ok(menu)
    }

    fn check_shape(&self, items: usize) -> Result<()> {
        for (j, e) in self.entries.iter().enumerate() {
            if e.phi.len() != items {
                return Err(Error::InvalidMenu(format!(
                    "entry {j} has {} allocation coordinates, expected {items}",
                    e.phi.len()
                )));
            }
            if e.phi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidMenu(format!(
                    "entry {j} has an allocation probability outside [0, 1]"
                )));
            }
            if e.price < 0.0 || !e.price.is_finite() {
                return Err(Error::InvalidMenu(format!(
                    "entry {j} has negative or non-finite price {}",
                    e.price
                )));
            }
        }
        Ok(())
    }

    /// All entries, null first.
    pub fn entries(&self) -> &[LotteryEntry] {
        &self.entries
    }

    /// Number of priced (non-null) entries.
    pub fn len(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn items(&self) -> usize {
        self.entries[0].phi.len()
    }

    /// Checks prices lie in `[0, items*h]` and, for unit-demand buyers, that
    /// every entry allocates total probability at most 1.
    pub fn validate(&self, h: f64, demand: DemandKind) -> Result<()> {
        let cap = self.items() as f64 * h;
        for (j, e) in self.entries.iter().enumerate() {
            if e.price > cap + TIE_TOL {
                return Err(Error::InvalidMenu(format!(
                    "entry {j} price {} exceeds m*H = {cap}",
                    e.price
                )));
            }
            if demand == DemandKind::UnitDemand {
                let total: f64 = e.phi.iter().sum();
                if total > 1.0 + TIE_TOL {
                    return Err(Error::InvalidMenu(format!(
                        "entry {j} allocates total probability {total} > 1 to a unit-demand buyer"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A buyer's selected option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    NoPurchase,
    /// Tariff index `1..=ell` and unit count `1..=K`.
    Tariff {
        tariff: usize,
        units: usize,
    },
    /// Lottery entry index `0..=ell` (0 is the null lottery).
    Lottery {
        entry: usize,
    },
}

impl Choice {
    /// Unit count bought under this choice (0 for no purchase / lotteries).
    pub fn units(&self) -> usize {
        match self {
            Choice::Tariff { units, .. } => *units,
            _ => 0,
        }
    }
}

/// Buyer utility of `choice` under a tariff menu: `v(k) - p1 - k*p2`, or 0
/// for no purchase.
pub fn tariff_utility(menu: &TariffMenu, val: &UnitValuation, choice: &Choice) -> Result<f64> {
    match choice {
        Choice::NoPurchase => Ok(0.0),
        Choice::Tariff { tariff, units } => {
            if *tariff == 0 || *tariff > menu.len() {
                return Err(Error::InvalidChoice(format!(
                    "tariff index {tariff} out of bounds for menu of length {}",
                    menu.len()
                )));
            }
            if *units == 0 || *units > val.max_units() {
                return Err(Error::InvalidChoice(format!(
                    "unit count {units} out of bounds for K = {}",
                    val.max_units()
                )));
            }
            let t = &menu.tariffs[*tariff - 1];
            Ok(val.value(*units) - t.price(*units))
        }
        Choice::Lottery { .. } => Err(Error::InvalidChoice(
            "lottery choice applied to a tariff menu".into(),
        )),
    }
}

/// Buyer utility of lottery entry `j`: expected value minus price.
pub fn lottery_utility(menu: &LotteryMenu, val: &ItemValuation, entry: usize) -> Result<f64> {
    let Some(e) = menu.entries().get(entry) else {
        return Err(Error::InvalidChoice(format!(
            "lottery entry {entry} out of bounds for menu with {} entries",
            menu.entries().len()
        )));
    };
    if e.phi.len() != val.items() {
        return Err(Error::InvalidChoice(format!(
            "menu has {} items, valuation has {}",
            e.phi.len(),
            val.items()
        )));
    }
    let value: f64 = e
        .phi
        .iter()
        .zip(val.item_values())
        .map(|(p, v)| p * v)
        .sum();
    Ok(value - e.price)
}

/// Result of a best-response computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub choice: Choice,
    pub revenue: f64,
    pub utility: f64,
}

/// The buyer's utility-maximizing option on a tariff menu, with the
/// seller-favorable tie-break.
pub fn best_response_tariff(menu: &TariffMenu, val: &UnitValuation) -> BestResponse {
    // Pass 1: maximum utility over no-purchase and all (j, k).
    let mut max_u = 0.0_f64;
    for t in &menu.tariffs {
        for k in 1..=val.max_units() {
            let u = val.value(k) - t.price(k);
            if u > max_u {
                max_u = u;
            }
        }
    }
    // Pass 2: among the utility tie band, maximum revenue, then smallest
    // (j, k) in lexicographic order; no-purchase loses full ties.
    let mut best: Option<(usize, usize, f64)> = None;
    for (idx, t) in menu.tariffs.iter().enumerate() {
        for k in 1..=val.max_units() {
            let u = val.value(k) - t.price(k);
            if u < max_u - TIE_TOL {
                continue;
            }
            let rev = t.price(k);
            let better = match best {
                None => true,
                Some((_, _, best_rev)) => rev > best_rev + TIE_TOL,
            };
            if better {
                best = Some((idx + 1, k, rev));
            }
        }
    }
    let no_purchase_in_band = 0.0 >= max_u - TIE_TOL;
    match best {
        Some((tariff, units, revenue)) if !(no_purchase_in_band && 0.0 > revenue + TIE_TOL) => {
            BestResponse {
                choice: Choice::Tariff { tariff, units },
                revenue,
                utility: val.value(units) - revenue,
            }
        }
        _ => BestResponse {
            choice: Choice::NoPurchase,
            revenue: 0.0,
            utility: 0.0,
        },
    }
}

/// Revenue of a tariff menu against a valuation.
pub fn tariff_revenue(menu: &TariffMenu, val: &UnitValuation) -> f64 {
    best_response_tariff(menu, val).revenue
}

/// The buyer's utility-maximizing lottery, with the seller-favorable
/// tie-break (max price among utility maximizers, then smallest index).
///
/// Errors if a unit-demand buyer faces an entry allocating total probability
/// above 1.
pub fn best_response_lottery(menu: &LotteryMenu, val: &ItemValuation) -> Result<BestResponse> {
    menu.validate(val.cap(), val.demand())?;
    let utilities: Vec<f64> = menu
        .entries()
        .iter()
        .map(|e| {
            let value: f64 = e
                .phi
                .iter()
                .zip(val.item_values())
                .map(|(p, v)| p * v)
                .sum();
            value - e.price
        })
        .collect();
    let max_u = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best_idx = 0_usize;
    let mut best_price = f64::NEG_INFINITY;
    for (j, (&u, e)) in utilities.iter().zip(menu.entries()).enumerate() {
        if u < max_u - TIE_TOL {
            continue;
        }
        if e.price > best_price + TIE_TOL {
            best_idx = j;
            best_price = e.price;
        }
    }
    Ok(BestResponse {
        choice: Choice::Lottery { entry: best_idx },
        revenue: menu.entries()[best_idx].price,
        utility: utilities[best_idx],
    })
}

/// Revenue of a lottery menu against a pre-validated valuation/menu pair.
pub fn lottery_revenue(menu: &LotteryMenu, val: &ItemValuation) -> f64 {
    best_response_lottery(menu, val)
        .expect("menu validated for this buyer")
        .revenue
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(values: &[f64]) -> UnitValuation {
        UnitValuation::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn tariff_utility_matches_formula() {
        let menu = TariffMenu::from_pairs(&[(0.1, 0.3), (0.5, 0.1)]);
        let val = v(&[0.0, 0.4, 0.7, 0.9]);
        let u = tariff_utility(
            &menu,
            &val,
            &Choice::Tariff {
                tariff: 2,
                units: 3,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(u, 0.9 - 0.5 - 3.0 * 0.1, epsilon = 1e-12);
        assert_eq!(
            tariff_utility(&menu, &val, &Choice::NoPurchase).unwrap(),
            0.0
        );
    }

    #[test]
    fn tariff_utility_zero_surplus() {
        let menu = TariffMenu::from_pairs(&[(0.1, 0.3)]);
        let val = v(&[0.0, 0.4]);
        let u = tariff_utility(
            &menu,
            &val,
            &Choice::Tariff {
                tariff: 1,
                units: 1,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tariff_utility_rejects_bad_choice() {
        let menu = TariffMenu::from_pairs(&[(0.1, 0.3)]);
        let val = v(&[0.0, 0.4]);
        assert!(tariff_utility(
            &menu,
            &val,
            &Choice::Tariff {
                tariff: 2,
                units: 1
            }
        )
        .is_err());
        assert!(tariff_utility(
            &menu,
            &val,
            &Choice::Tariff {
                tariff: 1,
                units: 5
            }
        )
        .is_err());
    }

    #[test]
    fn best_response_tariff_example() {
        let menu = TariffMenu::from_pairs(&[(0.1, 0.3), (0.5, 0.1)]);
        let val = v(&[0.0, 0.4, 0.7, 0.9]);
        let br = best_response_tariff(&menu, &val);
        assert_eq!(
            br.choice,
            Choice::Tariff {
                tariff: 2,
                units: 3
            }
        );
        assert_abs_diff_eq!(br.revenue, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(br.utility, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn best_response_tariff_no_purchase_when_worthless() {
        let menu = TariffMenu::from_pairs(&[(0.5, 0.2)]);
        let val = v(&[0.0, 0.0, 0.0]);
        let br = best_response_tariff(&menu, &val);
        assert_eq!(br.choice, Choice::NoPurchase);
        assert_eq!(br.revenue, 0.0);
    }

    #[test]
    fn best_response_tariff_lexicographic_on_duplicates() {
        let menu = TariffMenu::from_pairs(&[(0.2, 0.2), (0.2, 0.2)]);
        let val = v(&[0.0, 0.5]);
        let br = best_response_tariff(&menu, &val);
        assert_eq!(
            br.choice,
            Choice::Tariff {
                tariff: 1,
                units: 1
            }
        );
        assert_abs_diff_eq!(br.revenue, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn best_response_tariff_prefers_revenue_on_utility_tie() {
        // Buying 1 unit or 2 units both yield utility 0.1; the pricier one wins.
        let menu = TariffMenu::from_pairs(&[(0.1, 0.2)]);
        let val = v(&[0.0, 0.4, 0.6]);
        let br = best_response_tariff(&menu, &val);
        assert_eq!(
            br.choice,
            Choice::Tariff {
                tariff: 1,
                units: 2
            }
        );
        assert_abs_diff_eq!(br.revenue, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn free_purchase_beats_no_purchase() {
        let menu = TariffMenu::from_pairs(&[(0.0, 0.0)]);
        let val = v(&[0.0, 0.0]);
        let br = best_response_tariff(&menu, &val);
        assert_eq!(
            br.choice,
            Choice::Tariff {
                tariff: 1,
                units: 1
            }
        );
    }

    fn example_one_menu() -> LotteryMenu {
        LotteryMenu::new(
            1,
            vec![
                LotteryEntry::new(vec![0.26], 0.24),
                LotteryEntry::new(vec![0.95], 0.52),
            ],
        )
        .unwrap()
    }

    #[test]
    fn best_response_lottery_example_one() {
        let val = ItemValuation::new(vec![0.6], DemandKind::Additive, 1.0).unwrap();
        let br = best_response_lottery(&example_one_menu(), &val).unwrap();
        assert_eq!(br.choice, Choice::Lottery { entry: 2 });
        assert_eq!(br.revenue, 0.52);
        assert_abs_diff_eq!(br.utility, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn best_response_lottery_after_naive_round_down() {
        let menu = LotteryMenu::new(
            1,
            vec![
                LotteryEntry::new(vec![0.25], 0.125),
                LotteryEntry::new(vec![0.5], 0.5),
            ],
        )
        .unwrap();
        let val = ItemValuation::new(vec![0.6], DemandKind::Additive, 1.0).unwrap();
        let br = best_response_lottery(&menu, &val).unwrap();
        assert_eq!(br.choice, Choice::Lottery { entry: 1 });
        assert_eq!(br.revenue, 0.125);
    }

    #[test]
    fn best_response_lottery_zero_values_take_null() {
        let val = ItemValuation::new(vec![0.0], DemandKind::Additive, 1.0).unwrap();
        let br = best_response_lottery(&example_one_menu(), &val).unwrap();
        assert_eq!(br.choice, Choice::Lottery { entry: 0 });
        assert_eq!(br.revenue, 0.0);
    }

    #[test]
    fn unit_demand_rejects_oversubscribed_entry() {
        let menu = LotteryMenu::new(2, vec![LotteryEntry::new(vec![0.7, 0.6], 0.5)]).unwrap();
        let val = ItemValuation::new(vec![0.5, 0.5], DemandKind::UnitDemand, 1.0).unwrap();
        assert!(best_response_lottery(&menu, &val).is_err());
        let additive = ItemValuation::new(vec![0.5, 0.5], DemandKind::Additive, 1.0).unwrap();
        assert!(best_response_lottery(&menu, &additive).is_ok());
    }

    #[test]
    fn valuation_invariants_enforced() {
        assert!(UnitValuation::new(vec![0.1, 0.2], 1.0).is_err()); // v(0) != 0
        assert!(UnitValuation::new(vec![0.0, 0.5, 0.3], 1.0).is_err()); // decreasing
        assert!(UnitValuation::new(vec![0.0, 1.5], 1.0).is_err()); // above H
        assert!(UnitValuation::new(vec![0.0, 0.5], 1.0).is_ok());
    }

    #[test]
    fn json_round_trips_match_schema() {
        let val = v(&[0.0, 0.4, 0.7]);
        let s = serde_json::to_string(&val).unwrap();
        assert!(s.contains("\"values\""), "{s}");
        assert!(s.contains("\"H\""), "{s}");
        assert!(s.contains("\"K\""), "{s}");
        let back: UnitValuation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, val);

        let menu = TariffMenu::from_pairs(&[(0.1, 0.3)]);
        let s = serde_json::to_string(&menu).unwrap();
        assert_eq!(s, r#"{"tariffs":[[0.1,0.3]]}"#);
        let back: TariffMenu = serde_json::from_str(&s).unwrap();
        assert_eq!(back, menu);

        let lm = example_one_menu();
        let s = serde_json::to_string(&lm).unwrap();
        assert!(s.contains("\"entries\""));
        assert!(s.contains("\"phi\""));
        assert!(s.contains("\"price\""));
        let back: LotteryMenu = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lm);

        // Entry 0 must be null on the wire.
        let bad = r#"{"entries":[{"phi":[0.5],"price":0.1}]}"#;
        assert!(serde_json::from_str::<LotteryMenu>(bad).is_err());

        let item = ItemValuation::new(vec![0.2, 0.7], DemandKind::UnitDemand, 1.0).unwrap();
        let s = serde_json::to_string(&item).unwrap();
        assert!(
            s.contains("\"item_values\"") && s.contains("\"demand\""),
            "{s}"
        );
        let back: ItemValuation = serde_json::from_str(&s).unwrap();
        assert_eq!(back, item);
        // demand defaults to additive when omitted.
        let short: ItemValuation =
            serde_json::from_str(r#"{"item_values":[0.5],"H":1.0}"#).unwrap();
        assert_eq!(short.demand(), DemandKind::Additive);
    }
}
