//! Linear model of menu options over the parameter box.
//!
//! Both families fit the same shape: a menu is a point `x` in a box, each
//! option `o` gives buyer type `i` utility `coef[o]·x + intercept[i][o]` and
//! the seller revenue `price_coef[o]·x`. Tariff menus use coordinates
//! `(p1_1, p2_1, ..., p1_ell, p2_ell)`; lottery menus use
//! `(phi_1[0..m], p_1, ..., phi_ell[0..m], p_ell)` with the null entry fixed
//! at zero and excluded from the coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{
    best_response_lottery, best_response_tariff, BestResponse, Choice, ItemValuation, LotteryEntry,
    LotteryMenu, Tariff, TariffMenu, UnitValuation,
};

/// A homogeneous set of potential buyer types.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TypeSet {
    Unit(Vec<UnitValuation>),
    Item(Vec<ItemValuation>),
}

impl TypeSet {
    pub fn unit(types: Vec<UnitValuation>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Config("type set must be nonempty".into()));
        }
        let h = types[0].cap();
        let k = types[0].max_units();
        if types.iter().any(|t| t.cap() != h || t.max_units() != k) {
            return Err(Error::Config("all types must share H and K".into()));
        }
        Ok(TypeSet::Unit(types))
    }

    pub fn item(types: Vec<ItemValuation>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Config("type set must be nonempty".into()));
        }
        let h = types[0].cap();
        let m = types[0].items();
        if types.iter().any(|t| t.cap() != h || t.items() != m) {
            return Err(Error::Config("all types must share H and m".into()));
        }
        Ok(TypeSet::Item(types))
    }

    pub fn len(&self) -> usize {
        match self {
            TypeSet::Unit(v) => v.len(),
            TypeSet::Item(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cap(&self) -> f64 {
        match self {
            TypeSet::Unit(v) => v[0].cap(),
            TypeSet::Item(v) => v[0].cap(),
        }
    }

    /// `K` for tariffs, `m` for lotteries.
    pub fn inner_dim(&self) -> usize {
        match self {
            TypeSet::Unit(v) => v[0].max_units(),
            TypeSet::Item(v) => v[0].items(),
        }
    }

    /// Per-round payoff cap: `H` for tariffs, `m*H` for lotteries.
    pub fn payoff_cap(&self) -> f64 {
        match self {
            TypeSet::Unit(v) => v[0].cap(),
            TypeSet::Item(v) => v[0].items() as f64 * v[0].cap(),
        }
    }
}

/// A menu expressed as a point in the parameter box.
#[derive(Debug, Clone, PartialEq)]
pub enum MenuPoint {
    Tariff(TariffMenu),
    Lottery(LotteryMenu),
}

#[derive(Debug, Clone)]
pub(crate) struct OptionSpec {
    /// Utility coefficients on the menu coordinates.
    pub coef: Vec<f64>,
    /// Seller revenue coefficients on the menu coordinates.
    pub price_coef: Vec<f64>,
    pub label: Choice,
}

/// The shared linear structure: options, per-type intercepts, and the box.
#[derive(Debug, Clone)]
pub(crate) struct OptionModel {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub options: Vec<OptionSpec>,
    /// `intercepts[type][option]`.
    pub intercepts: Vec<Vec<f64>>,
    is_tariff: bool,
    items: usize,
    /// `|O|` as the option-set cardinality used in block-count formulas:
    /// `ell*(K+1)` for tariffs, `ell+1` for lotteries.
    pub option_cardinality: usize,
}

impl OptionModel {
    pub fn build(types: &TypeSet, ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Config("menu length must be positive".into()));
        }
        match types {
            TypeSet::Unit(ts) => {
                let h = ts[0].cap();
                let k_max = ts[0].max_units();
                let dim = 2 * ell;
                let mut options = vec![OptionSpec {
                    coef: vec![0.0; dim],
                    price_coef: vec![0.0; dim],
                    label: Choice::NoPurchase,
                }];
                for j in 1..=ell {
                    for k in 1..=k_max {
                        let mut coef = vec![0.0; dim];
                        coef[2 * (j - 1)] = -1.0;
                        coef[2 * (j - 1) + 1] = -(k as f64);
                        let price_coef: Vec<f64> = coef.iter().map(|c| -c).collect();
                        options.push(OptionSpec {
                            coef,
                            price_coef,
                            label: Choice::Tariff {
                                tariff: j,
                                units: k,
                            },
                        });
                    }
                }
                let intercepts: Vec<Vec<f64>> = ts
                    .iter()
                    .map(|t| {
                        options
                            .iter()
                            .map(|o| match o.label {
                                Choice::NoPurchase => 0.0,
                                Choice::Tariff { units, .. } => t.value(units),
                                Choice::Lottery { .. } => unreachable!(),
                            })
                            .collect()
                    })
                    .collect();
                Ok(OptionModel {
                    dim,
                    lower: vec![0.0; dim],
                    upper: vec![h; dim],
                    options,
                    intercepts,
                    is_tariff: true,
                    items: 0,
                    option_cardinality: ell * (k_max + 1),
                })
            }
            TypeSet::Item(ts) => {
                let h = ts[0].cap();
                let m = ts[0].items();
                let dim = ell * (m + 1);
                let mut options = vec![OptionSpec {
                    coef: vec![0.0; dim],
                    price_coef: vec![0.0; dim],
                    label: Choice::Lottery { entry: 0 },
                }];
                let lower = vec![0.0; dim];
                let mut upper = vec![0.0; dim];
                for j in 0..ell {
                    for i in 0..m {
                        upper[j * (m + 1) + i] = 1.0;
                    }
                    upper[j * (m + 1) + m] = m as f64 * h;
                }
                for j in 1..=ell {
                    let base = (j - 1) * (m + 1);
                    let mut price_coef = vec![0.0; dim];
                    price_coef[base + m] = 1.0;
                    options.push(OptionSpec {
                        coef: vec![0.0; dim], // filled per type below
                        price_coef,
                        label: Choice::Lottery { entry: j },
                    });
                }
                // Lottery utility coefficients depend on the type (value per
                // item); the shared `coef` stays zero and `utility_coef`
                // folds the item values in per type.
                let intercepts: Vec<Vec<f64>> =
                    ts.iter().map(|_| vec![0.0; options.len()]).collect();
                Ok(OptionModel {
                    dim,
                    lower,
                    upper,
                    options,
                    intercepts,
                    is_tariff: false,
                    items: m,
                    option_cardinality: ell + 1,
                })
            }
        }
    }

    pub fn is_tariff(&self) -> bool {
        self.is_tariff
    }

    /// Utility coefficient vector of `option` for buyer `type_index`.
    ///
    /// Tariff coefficients are type-independent; lottery coefficients carry
    /// the buyer's item values on the allocation coordinates.
    pub fn utility_coef(&self, types: &TypeSet, type_index: usize, option: usize) -> Vec<f64> {
        match types {
            TypeSet::Unit(_) => self.options[option].coef.clone(),
            TypeSet::Item(ts) => {
                let mut coef = vec![0.0; self.dim];
                if let Choice::Lottery { entry: j } = self.options[option].label {
                    if j >= 1 {
                        let m = self.items;
                        let base = (j - 1) * (m + 1);
                        coef[base..base + m].copy_from_slice(ts[type_index].item_values());
                        coef[base + m] = -1.0;
                    }
                }
                coef
            }
        }
    }

    pub fn utility_intercept(&self, types: &TypeSet, type_index: usize, option: usize) -> f64 {
        match types {
            TypeSet::Unit(_) => self.intercepts[type_index][option],
            TypeSet::Item(_) => 0.0,
        }
    }

    /// Price of `option` at menu point `x`.
    pub fn price_at(&self, option: usize, x: &[f64]) -> f64 {
        self.options[option]
            .price_coef
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum()
    }

    /// Reconstructs the concrete menu at point `x`.
    pub fn menu_at(&self, x: &[f64]) -> MenuPoint {
        if self.is_tariff {
            let tariffs: Vec<Tariff> = x.chunks(2).map(|c| Tariff::new(c[0], c[1])).collect();
            MenuPoint::Tariff(TariffMenu::new(tariffs))
        } else {
            let m = self.items;
            let entries: Vec<LotteryEntry> = x
                .chunks(m + 1)
                .map(|c| LotteryEntry::new(c[..m].to_vec(), c[m]))
                .collect();
            MenuPoint::Lottery(
                LotteryMenu::new(m, entries).expect("box point is a valid lottery menu"),
            )
        }
    }

    /// Best response of type `type_index` at menu point `x`, through the
    /// mechanisms oracles so tie-breaking is identical everywhere.
    pub fn best_response_at(&self, types: &TypeSet, type_index: usize, x: &[f64]) -> BestResponse {
        match (types, self.menu_at(x)) {
            (TypeSet::Unit(ts), MenuPoint::Tariff(menu)) => {
                best_response_tariff(&menu, &ts[type_index])
            }
            (TypeSet::Item(ts), MenuPoint::Lottery(menu)) => {
                best_response_lottery(&menu, &ts[type_index])
                    .expect("box point is feasible for the type set")
            }
            _ => unreachable!("type set and model family always match"),
        }
    }

    /// Index of the option carrying this label.
    pub fn option_index(&self, label: &Choice) -> Option<usize> {
        self.options.iter().position(|o| o.label == *label)
    }
}
