//! Hyperplane arrangement machinery: indifference hyperplanes, vertex
//! enumeration, feasible-mapping regions, and the extended extreme-point set.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lp::chebyshev_center;
use super::model::{OptionModel, TypeSet};
use crate::error::{Error, Result};
use crate::mechanisms::Choice;
use crate::parallel;
use crate::DEFAULT_ENUMERATION_CAP;

const GEOM_TOL: f64 = 1e-9;
/// Rejection sampling budget before falling back to the LP, and the number
/// of accepted samples averaged into the interior-point estimate.
const REJECTION_DRAWS: usize = 10_000;
const CENTER_SAMPLES: usize = 100;

/// Where a hyperplane came from.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperplaneKind {
    /// Indifference of one buyer type between two options.
    Indifference {
        type_index: usize,
        first: Choice,
        second: Choice,
    },
    /// A facet of the parameter box.
    BoxFacet { coord: usize, at_upper: bool },
}

/// A hyperplane `normal · x = offset`, normalized to unit normal. Duplicate
/// constructions (equal up to positive scaling) merge into `multiplicity`.
#[derive(Debug, Clone)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub provenance: HyperplaneKind,
    pub multiplicity: usize,
}

impl Hyperplane {
    /// Signed distance from `point` to the plane (normal is unit length).
    pub fn distance(&self, point: &[f64]) -> f64 {
        let dot: f64 = self.normal.iter().zip(point).map(|(n, x)| n * x).sum();
        (dot - self.offset).abs()
    }

    pub fn is_box_facet(&self) -> bool {
        matches!(self.provenance, HyperplaneKind::BoxFacet { .. })
    }
}

/// Builds one hyperplane per (type, unordered option pair) indifference
/// equality plus the `2d` box facets. Duplicates merge with multiplicity.
pub fn build_hyperplanes(types: &TypeSet, ell: usize) -> Result<Vec<Hyperplane>> {
    let model = OptionModel::build(types, ell)?;
    Ok(build_hyperplanes_from_model(&model, types))
}

pub(crate) fn build_hyperplanes_from_model(
    model: &OptionModel,
    types: &TypeSet,
) -> Vec<Hyperplane> {
    let mut planes: Vec<Hyperplane> = Vec::new();
    let mut push = |normal: Vec<f64>, offset: f64, provenance: HyperplaneKind| {
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < GEOM_TOL {
            return;
        }
        let normal: Vec<f64> = normal.iter().map(|v| v / norm).collect();
        let offset = offset / norm;
        for p in planes.iter_mut() {
            if (p.offset - offset).abs() < GEOM_TOL
                && p.normal
                    .iter()
                    .zip(&normal)
                    .all(|(a, b)| (a - b).abs() < GEOM_TOL)
            {
                p.multiplicity += 1;
                return;
            }
        }
        planes.push(Hyperplane {
            normal,
            offset,
            provenance,
            multiplicity: 1,
        });
    };

    let n_opts = model.options.len();
    for ti in 0..types.len() {
        for a in 0..n_opts {
            for b in (a + 1)..n_opts {
                let ca = model.utility_coef(types, ti, a);
                let cb = model.utility_coef(types, ti, b);
                let normal: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x - y).collect();
                let offset =
                    model.utility_intercept(types, ti, b) - model.utility_intercept(types, ti, a);
                push(
                    normal,
                    offset,
                    HyperplaneKind::Indifference {
                        type_index: ti,
                        first: model.options[a].label,
                        second: model.options[b].label,
                    },
                );
            }
        }
    }
    for coord in 0..model.dim {
        for (at_upper, offset) in [(false, model.lower[coord]), (true, model.upper[coord])] {
            let mut normal = vec![0.0; model.dim];
            normal[coord] = 1.0;
            push(normal, offset, HyperplaneKind::BoxFacet { coord, at_upper });
        }
    }
    planes
}

/// Assignment of each buyer type to its chosen option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    pub assignment: Vec<Choice>,
}

/// A feasible mapping's convex region: half-space inequalities
/// (`normal · x <= offset`, box included) plus a certified interior point.
#[derive(Debug, Clone)]
pub struct Region {
    pub mapping: Mapping,
    pub inequalities: Vec<(Vec<f64>, f64)>,
    pub interior: Vec<f64>,
}

/// Best response of every type to a concrete menu point.
pub(crate) fn mapping_at_point(model: &OptionModel, types: &TypeSet, x: &[f64]) -> Mapping {
    Mapping {
        assignment: (0..types.len())
            .map(|i| model.best_response_at(types, i, x).choice)
            .collect(),
    }
}

/// Applies each type's best response to the menu; the mapping labels the
/// region of parameter space the menu lies in.
pub fn mapping_of_menu(types: &TypeSet, ell: usize, menu_params: &[f64]) -> Result<Mapping> {
    let model = OptionModel::build(types, ell)?;
    if menu_params.len() != model.dim {
        return Err(Error::Config(format!(
            "menu point has {} coordinates, expected {}",
            menu_params.len(),
            model.dim
        )));
    }
    Ok(mapping_at_point(&model, types, menu_params))
}

/// Inequality system of the region inducing `mapping`: for each type, the
/// chosen option weakly beats every other option; box facets included.
pub(crate) fn region_inequalities(
    model: &OptionModel,
    types: &TypeSet,
    mapping: &Mapping,
) -> Vec<(Vec<f64>, f64)> {
    let mut ineqs = Vec::new();
    for (ti, choice) in mapping.assignment.iter().enumerate() {
        let chosen = model
            .option_index(choice)
            .expect("mapping uses options of this model");
        let cc = model.utility_coef(types, ti, chosen);
        let ci = model.utility_intercept(types, ti, chosen);
        for o in 0..model.options.len() {
            if o == chosen {
                continue;
            }
            let oc = model.utility_coef(types, ti, o);
            let oi = model.utility_intercept(types, ti, o);
            // u(chosen) >= u(o)  <=>  (oc - cc)·x <= ci - oi
            let normal: Vec<f64> = oc.iter().zip(&cc).map(|(a, b)| a - b).collect();
            if normal.iter().all(|v| v.abs() < GEOM_TOL) {
                continue;
            }
            ineqs.push((normal, ci - oi));
        }
    }
    for coord in 0..model.dim {
        let mut lo = vec![0.0; model.dim];
        lo[coord] = -1.0;
        ineqs.push((lo, -model.lower[coord]));
        let mut hi = vec![0.0; model.dim];
        hi[coord] = 1.0;
        ineqs.push((hi, model.upper[coord]));
    }
    ineqs
}

fn satisfies(ineqs: &[(Vec<f64>, f64)], x: &[f64], slack: f64) -> bool {
    ineqs.iter().all(|(n, b)| {
        let dot: f64 = n.iter().zip(x).map(|(a, v)| a * v).sum();
        dot <= b + slack
    })
}

/// Finds an interior point of the mapping's region: rejection sampling first
/// (averaging accepted draws approximates the center), exact LP fallback.
fn interior_point(
    model: &OptionModel,
    ineqs: &[(Vec<f64>, f64)],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    let d = model.dim;
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    for _ in 0..REJECTION_DRAWS {
        let x: Vec<f64> = (0..d)
            .map(|i| rng.gen_range(model.lower[i]..=model.upper[i]))
            .collect();
        if satisfies(ineqs, &x, -GEOM_TOL) {
            accepted.push(x);
            if accepted.len() >= CENTER_SAMPLES {
                break;
            }
        }
    }
    if !accepted.is_empty() {
        let mut center = vec![0.0; d];
        for x in &accepted {
            for (c, v) in center.iter_mut().zip(x) {
                *c += v;
            }
        }
        for c in &mut center {
            *c /= accepted.len() as f64;
        }
        return Some(center);
    }
    let normals: Vec<Vec<f64>> = ineqs.iter().map(|(n, _)| n.clone()).collect();
    let offsets: Vec<f64> = ineqs.iter().map(|(_, b)| *b).collect();
    chebyshev_center(&normals, &offsets, &model.lower, &model.upper).map(|(c, _)| c)
}

/// A member of the extended extreme-point set: a region-vertex menu perturbed
/// into its region.
#[derive(Debug, Clone)]
pub struct ExtremePoint {
    /// Menu coordinates (inside the region).
    pub params: Vec<f64>,
    /// The vertex this point was derived from.
    pub vertex: Vec<f64>,
    /// Index into [`ExtremePointSet::regions`].
    pub region: usize,
}

/// The extreme-point menus and the distinct certified regions they fall in.
#[derive(Debug, Clone)]
pub struct ExtremePointSet {
    pub points: Vec<ExtremePoint>,
    pub regions: Vec<Region>,
    /// All arrangement vertices inside the box (before perturbation).
    pub vertices: Vec<Vec<f64>>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Solves the `d`-subset intersection; `None` when rank-deficient.
fn solve_vertex(planes: &[&Hyperplane], d: usize) -> Option<Vec<f64>> {
    let a = DMatrix::from_fn(d, d, |r, c| planes[r].normal[c]);
    let b = DVector::from_fn(d, |r, _| planes[r].offset);
    let lu = a.lu();
    let det = lu.determinant();
    if det.abs() < 1e-12 {
        return None;
    }
    lu.solve(&b).map(|x| x.iter().cloned().collect())
}

fn in_box(x: &[f64], lower: &[f64], upper: &[f64], tol: f64) -> bool {
    x.iter()
        .zip(lower.iter().zip(upper))
        .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
}

/// Enumerates the arrangement vertices and, for each vertex and adjacent
/// feasible region, emits a representative menu inside the region at L1
/// distance at most `epsilon` from the vertex.
pub fn enumerate_extreme_points(
    types: &TypeSet,
    ell: usize,
    epsilon: f64,
    cap: Option<u128>,
) -> Result<ExtremePointSet> {
    let model = OptionModel::build(types, ell)?;
    let planes = build_hyperplanes_from_model(&model, types);
    let d = model.dim;
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let subsets = binomial(planes.len(), d);
    if subsets > cap {
        return Err(Error::EnumerationTooLarge {
            count: subsets,
            cap,
        });
    }

    // All d-subsets of planes with independent normals, solved in parallel
    // chunks over the first index.
    let plane_refs: Vec<&Hyperplane> = planes.iter().collect();
    let combos = combinations(plane_refs.len(), d);
    let vertices_raw: Vec<Option<Vec<f64>>> = parallel::map_slice(&combos, |combo| {
        let subset: Vec<&Hyperplane> = combo.iter().map(|&i| plane_refs[i]).collect();
        solve_vertex(&subset, d).filter(|x| in_box(x, &model.lower, &model.upper, GEOM_TOL))
    });
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for v in vertices_raw.into_iter().flatten() {
        if !vertices
            .iter()
            .any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < GEOM_TOL))
        {
            vertices.push(v);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    let mut regions: Vec<Region> = Vec::new();
    let mut points: Vec<ExtremePoint> = Vec::new();

    for vertex in &vertices {
        // Distance to the nearest plane NOT through the vertex bounds how far
        // we can probe without crossing unrelated boundaries.
        let mut clearance = f64::INFINITY;
        for p in &planes {
            let dist = p.distance(vertex);
            if dist > GEOM_TOL && dist < clearance {
                clearance = dist;
            }
        }
        let step = (clearance / 2.0).min(epsilon / 2.0).max(1e-7);

        let mut candidate_mappings: Vec<Mapping> = Vec::new();
        for dir in probe_directions(d, &mut rng) {
            let y: Vec<f64> = vertex.iter().zip(&dir).map(|(v, u)| v + step * u).collect();
            if !in_box(&y, &model.lower, &model.upper, 0.0) {
                continue;
            }
            let mapping = mapping_at_point(&model, types, &y);
            if !candidate_mappings.contains(&mapping) {
                candidate_mappings.push(mapping);
            }
        }

        for mapping in candidate_mappings {
            let region_idx = match regions.iter().position(|r| r.mapping == mapping) {
                Some(i) => i,
                None => {
                    let ineqs = region_inequalities(&model, types, &mapping);
                    let Some(interior) = interior_point(&model, &ineqs, &mut rng) else {
                        continue; // no full-dimensional region for this mapping
                    };
                    // Certify: the interior point must reproduce the mapping.
                    if mapping_at_point(&model, types, &interior) != mapping {
                        continue;
                    }
                    regions.push(Region {
                        mapping,
                        inequalities: ineqs,
                        interior,
                    });
                    regions.len() - 1
                }
            };
            let region = &regions[region_idx];
            // Step from the vertex toward the interior point, L1 length
            // exactly epsilon (capped so we never overshoot the center).
            let delta: Vec<f64> = region
                .interior
                .iter()
                .zip(vertex)
                .map(|(c, v)| c - v)
                .collect();
            let l1: f64 = delta.iter().map(|v| v.abs()).sum();
            if l1 < GEOM_TOL {
                continue;
            }
            let mut certified = None;
            let mut scale = (epsilon / l1).min(1.0);
            for _ in 0..6 {
                let candidate: Vec<f64> = vertex
                    .iter()
                    .zip(&delta)
                    .map(|(v, d)| v + scale * d)
                    .collect();
                if mapping_at_point(&model, types, &candidate) == region.mapping {
                    certified = Some(candidate);
                    break;
                }
                scale *= 0.5;
            }
            let Some(params) = certified else { continue };
            let duplicate = points.iter().any(|p| {
                p.params
                    .iter()
                    .zip(&params)
                    .all(|(a, b)| (a - b).abs() < GEOM_TOL)
            });
            if !duplicate {
                points.push(ExtremePoint {
                    params,
                    vertex: vertex.clone(),
                    region: region_idx,
                });
            }
        }
    }

    Ok(ExtremePointSet {
        points,
        regions,
        vertices,
    })
}

/// All k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Advance.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Probe directions around a vertex: axis directions, all sign-pattern
/// diagonals, and a batch of random unit vectors.
fn probe_directions(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[i] = sign;
            dirs.push(u);
        }
    }
    if d <= 8 {
        for pattern in 0..(1usize << d) {
            let u: Vec<f64> = (0..d)
                .map(|i| {
                    if pattern >> i & 1 == 1 {
                        1.0 / (d as f64).sqrt()
                    } else {
                        -1.0 / (d as f64).sqrt()
                    }
                })
                .collect();
            dirs.push(u);
        }
    }
    for _ in 0..32 * d {
        let mut u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for v in &mut u {
            *v /= norm;
        }
        dirs.push(u);
    }
    dirs
}

/// Compares the best extreme-point menu against a dense-grid brute-force
/// optimum on a fixed sequence of type indices. Returns
/// `(best_corner_revenue, best_grid_revenue)` as cumulative revenues.
pub fn corner_loss_bound_check(
    types: &TypeSet,
    ell: usize,
    epsilon: f64,
    sequence: &[usize],
    cap: Option<u128>,
) -> Result<(f64, f64)> {
    let model = OptionModel::build(types, ell)?;
    let set = enumerate_extreme_points(types, ell, epsilon, cap)?;

    let counts = type_counts(types.len(), sequence);
    let cumulative = |x: &[f64]| -> f64 {
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(ti, &c)| c as f64 * model.best_response_at(types, ti, x).revenue)
            .sum()
    };

    let best_corner = set
        .points
        .iter()
        .map(|p| cumulative(&p.params))
        .fold(0.0_f64, f64::max);

    // Dense grid at pitch <= epsilon/4 per coordinate.
    let pitch = epsilon / 4.0;
    let steps: Vec<usize> = (0..model.dim)
        .map(|i| ((model.upper[i] - model.lower[i]) / pitch).ceil().max(1.0) as usize)
        .collect();
    let total: usize = steps.iter().map(|s| s + 1).product();
    let grid_best = parallel::map_range(total, |flat| {
        let mut x = vec![0.0; model.dim];
        let mut rest = flat;
        for i in 0..model.dim {
            let n = steps[i] + 1;
            let t = rest % n;
            rest /= n;
            x[i] = model.lower[i] + (model.upper[i] - model.lower[i]) * t as f64 / steps[i] as f64;
        }
        cumulative(&x)
    })
    .into_iter()
    .fold(0.0_f64, f64::max);

    Ok((best_corner, grid_best))
}

pub(crate) fn type_counts(n_types: usize, sequence: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; n_types];
    for &t in sequence {
        counts[t] += 1;
    }
    counts
}
