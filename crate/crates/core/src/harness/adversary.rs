//! Valuation stream generators: i.i.d. bounded-density draws, fixed
//! sequences from files, and cyclic type lists. Streams are materialized up
//! front so a run's counterfactual accounting can reuse them.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispersion::{sample_unit_valuation, BoundedDensity};
use crate::error::{Error, Result};
use crate::limited_types::TypeSet;
use crate::mechanisms::{DemandKind, ItemValuation, UnitValuation};

/// How buyers are generated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    /// Independent draws: tariff valuations sort `K` marginals; lottery
    /// valuations draw per item, optionally mixed with a shared component
    /// (`v_i = (1-s) x_i + s z`) to induce correlation.
    Iid {
        density: BoundedDensity,
        #[serde(default)]
        shared_mix: Option<f64>,
    },
    /// One valuation per line (JSON) in the file; for limited-type runs the
    /// lines are type indices instead.
    FixedSequence { path: PathBuf },
    /// Cycles through an inline list of valuations. Limited-type runs use
    /// the configured type set as the cycle.
    Cyclic { valuations: TypeSet },
}

/// A materialized buyer stream.
#[derive(Debug, Clone)]
pub enum BuyerStream {
    Unit(Vec<UnitValuation>),
    Item(Vec<ItemValuation>),
    /// Indices into a limited type set.
    TypeIndices(Vec<usize>),
}

impl BuyerStream {
    pub fn len(&self) -> usize {
        match self {
            BuyerStream::Unit(v) => v.len(),
            BuyerStream::Item(v) => v.len(),
            BuyerStream::TypeIndices(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn read_json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Generates a tariff-family stream of length `rounds`.
pub fn unit_stream(
    spec: &AdversarySpec,
    rounds: usize,
    max_units: usize,
    h: f64,
    seed: u64,
) -> Result<Vec<UnitValuation>> {
    match spec {
        AdversarySpec::Iid { density, .. } => {
            density.validate()?;
            let (lo, hi) = density.support();
            if lo < 0.0 || hi > h {
                return Err(Error::Config(format!(
                    "density support [{lo}, {hi}] must lie within [0, {h}]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..rounds)
                .map(|_| sample_unit_valuation(density, max_units, h, &mut rng))
                .collect())
        }
        AdversarySpec::FixedSequence { path } => {
            let vals: Vec<UnitValuation> = read_json_lines(path)?;
            take_exactly(vals, rounds)
        }
        AdversarySpec::Cyclic { valuations } => match valuations {
            TypeSet::Unit(list) => Ok((0..rounds).map(|t| list[t % list.len()].clone()).collect()),
            TypeSet::Item(_) => Err(Error::Config(
                "cyclic list holds item valuations but the run is tariff-family".into(),
            )),
        },
    }
}

/// Generates a lottery-family stream of length `rounds`.
pub fn item_stream(
    spec: &AdversarySpec,
    rounds: usize,
    items: usize,
    h: f64,
    demand: DemandKind,
    seed: u64,
) -> Result<Vec<ItemValuation>> {
    match spec {
        AdversarySpec::Iid {
            density,
            shared_mix,
        } => {
            density.validate()?;
            let (lo, hi) = density.support();
            if lo < 0.0 || hi > h {
                return Err(Error::Config(format!(
                    "density support [{lo}, {hi}] must lie within [0, {h}]"
                )));
            }
            let mix = shared_mix.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&mix) {
                return Err(Error::Config(format!(
                    "shared_mix must be in [0,1], got {mix}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..rounds)
                .map(|_| {
                    let shared = density.sample(&mut rng);
                    let values: Vec<f64> = (0..items)
                        .map(|_| {
                            let own = density.sample(&mut rng);
                            ((1.0 - mix) * own + mix * shared).clamp(0.0, h)
                        })
                        .collect();
                    ItemValuation::new(values, demand, h).expect("clamped draws are valid")
                })
                .collect())
        }
        AdversarySpec::FixedSequence { path } => {
            let vals: Vec<ItemValuation> = read_json_lines(path)?;
            take_exactly(vals, rounds)
        }
        AdversarySpec::Cyclic { valuations } => match valuations {
            TypeSet::Item(list) => Ok((0..rounds).map(|t| list[t % list.len()].clone()).collect()),
            TypeSet::Unit(_) => Err(Error::Config(
                "cyclic list holds unit valuations but the run is lottery-family".into(),
            )),
        },
    }
}

/// Generates a stream of type indices for limited-type runs. `Iid` draws
/// uniformly over the type set (the density names the index distribution in
/// spirit; only uniform is meaningful over discrete indices), `Cyclic`
/// cycles in order, `FixedSequence` reads indices from the file.
pub fn type_index_stream(
    spec: &AdversarySpec,
    rounds: usize,
    n_types: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    match spec {
        AdversarySpec::Iid { .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..rounds).map(|_| rng.gen_range(0..n_types)).collect())
        }
        AdversarySpec::Cyclic { .. } => Ok((0..rounds).map(|t| t % n_types).collect()),
        AdversarySpec::FixedSequence { path } => {
            let idx: Vec<usize> = read_json_lines(path)?;
            for &i in &idx {
                if i >= n_types {
                    return Err(Error::Config(format!(
                        "type index {i} out of range for {n_types} types"
                    )));
                }
            }
            take_exactly(idx, rounds)
        }
    }
}

fn take_exactly<T>(mut items: Vec<T>, rounds: usize) -> Result<Vec<T>> {
    if items.len() < rounds {
        return Err(Error::StreamExhausted {
            available: items.len(),
            requested: rounds,
        });
    }
    items.truncate(rounds);
    Ok(items)
}
