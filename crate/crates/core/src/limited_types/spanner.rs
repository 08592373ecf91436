//! Indicator vectors over buyer types and their barycentric spanner.
//!
//! For each region and each option appearing in its mapping, the indicator
//! vector marks which types select that option there. A barycentric spanner
//! is a basis of those vectors such that every indicator is a linear
//! combination with coefficients bounded by `C`; exploring only the spanner's
//! regions then suffices to estimate every corner menu's revenue.

use nalgebra::DMatrix;

use super::geometry::Region;
use crate::error::{Error, Result};
use crate::mechanisms::Choice;

/// A `{0,1}^V` indicator tagged with one (region, option) it arose from.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector {
    pub bits: Vec<bool>,
    pub region: usize,
    pub option: Choice,
}

impl IndicatorVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Emits, for every region and every option appearing in its mapping, the
/// indicator of the types assigned that option; duplicates (by bit pattern)
/// keep their first provenance.
pub fn build_indicator_set(regions: &[Region]) -> Vec<IndicatorVector> {
    let mut out: Vec<IndicatorVector> = Vec::new();
    for (ri, region) in regions.iter().enumerate() {
        let mut seen_options: Vec<Choice> = Vec::new();
        for choice in &region.mapping.assignment {
            if seen_options.contains(choice) {
                continue;
            }
            seen_options.push(*choice);
            let bits: Vec<bool> = region
                .mapping
                .assignment
                .iter()
                .map(|c| c == choice)
                .collect();
            if !out.iter().any(|iv| iv.bits == bits) {
                out.push(IndicatorVector {
                    bits,
                    region: ri,
                    option: *choice,
                });
            }
        }
    }
    out
}

/// A spanner basis over the span of the indicator set.
#[derive(Debug, Clone)]
pub struct SpannerBasis {
    /// Indices into the indicator set, one per basis slot.
    pub vectors: Vec<usize>,
    /// Verified bound: max |coefficient| over all representations.
    pub approximation_c: f64,
    /// `coefficients[i]` represents indicator `i` over the basis.
    pub coefficients: Vec<Vec<f64>>,
}

/// Row-reduces `rows` to find a maximal independent subset and the pivot
/// column indices certifying independence.
fn independent_rows(rows: &[Vec<f64>]) -> (Vec<usize>, Vec<usize>) {
    let mut chosen: Vec<usize> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (red, &p) in reduced.iter().zip(&pivots) {
            let f = r[p] / red[p];
            if f != 0.0 {
                for (a, b) in r.iter_mut().zip(red) {
                    *a -= f * b;
                }
            }
        }
        if let Some((p, _)) = r
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-9)
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        {
            chosen.push(i);
            pivots.push(p);
            reduced.push(r);
        }
    }
    (chosen, pivots)
}

fn det_on_pivots(indicators: &[IndicatorVector], basis: &[usize], pivots: &[usize]) -> f64 {
    let r = basis.len();
    DMatrix::from_fn(r, r, |i, j| {
        if indicators[basis[i]].bits[pivots[j]] {
            1.0
        } else {
            0.0
        }
    })
    .determinant()
}

/// Determinant-swap construction of a `C`-approximate barycentric spanner.
///
/// Maintains a basis of the indicator span; while replacing a basis vector by
/// some indicator multiplies |det| by more than `C`, swaps it in. On exit
/// every indicator's representation has coefficients in `[-C, C]` (verified
/// by solving the linear systems; the realized bound is returned).
pub fn barycentric_spanner(indicators: &[IndicatorVector], c: f64) -> Result<SpannerBasis> {
    if indicators.is_empty() {
        return Err(Error::Config("indicator set is empty".into()));
    }
    if c < 1.0 {
        return Err(Error::Config(format!("C must be >= 1, got {c}")));
    }
    let rows: Vec<Vec<f64>> = indicators.iter().map(|iv| iv.as_f64()).collect();
    let (mut basis, pivots) = independent_rows(&rows);
    let r = basis.len();

    // Swap loop; each swap grows |det| by a factor > C >= 1, so iterations
    // are bounded.
    let mut current = det_on_pivots(indicators, &basis, &pivots).abs();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if sweeps > 10_000 {
            return Err(Error::InvalidConstruction(
                "spanner swap loop failed to terminate".into(),
            ));
        }
        let mut swapped = false;
        for slot in 0..r {
            for (i, _) in indicators.iter().enumerate() {
                if basis.contains(&i) {
                    continue;
                }
                let saved = basis[slot];
                basis[slot] = i;
                let cand = det_on_pivots(indicators, &basis, &pivots).abs();
                if cand > c * current + 1e-12 {
                    current = cand;
                    swapped = true;
                } else {
                    basis[slot] = saved;
                }
            }
        }
        if !swapped {
            break;
        }
    }

    // Solve each indicator's representation over the basis using the pivot
    // coordinates (the projection is injective on the span).
    let basis_mat = DMatrix::from_fn(r, r, |i, j| {
        if indicators[basis[j]].bits[pivots[i]] {
            1.0
        } else {
            0.0
        }
    });
    let lu = basis_mat.lu();
    let mut coefficients = Vec::with_capacity(indicators.len());
    let mut max_coef: f64 = 0.0;
    for iv in indicators {
        let target =
            nalgebra::DVector::from_fn(r, |i, _| if iv.bits[pivots[i]] { 1.0 } else { 0.0 });
        let sol = lu
            .solve(&target)
            .ok_or_else(|| Error::InvalidConstruction("spanner basis became singular".into()))?;
        // Sanity: the representation must reproduce the full vector.
        let full = iv.as_f64();
        for (k, &fv) in full.iter().enumerate() {
            let rec: f64 = (0..r)
                .map(|j| {
                    sol[j]
                        * if indicators[basis[j]].bits[k] {
                            1.0
                        } else {
                            0.0
                        }
                })
                .sum();
            if (rec - fv).abs() > 1e-6 {
                return Err(Error::InvalidConstruction(
                    "indicator outside the basis span".into(),
                ));
            }
        }
        for v in sol.iter() {
            max_coef = max_coef.max(v.abs());
        }
        coefficients.push(sol.iter().cloned().collect());
    }

    Ok(SpannerBasis {
        vectors: basis,
        approximation_c: max_coef,
        coefficients,
    })
}
