//! Minimal dense two-phase simplex, used to find a strictly interior point
//! (Chebyshev center) of a region when rejection sampling comes up empty.

const EPS: f64 = 1e-10;

/// Maximizes `c·z` subject to `A z <= b`, `z >= 0`. Returns the optimal `z`,
/// or `None` if infeasible or unbounded.
fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let n = c.len();
    // Tableau with slack variables s_i (one per row) and, for rows with
    // negative b, artificial variables for phase 1.
    // Columns: [z (n)] [slack (m)] [artificial (m, lazily)] | rhs.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut n_art = 0usize;
    let mut art_col: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let mut row = vec![0.0; n + m];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row.push(b[i]);
        if b[i] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            art_col[i] = Some(n_art);
            n_art += 1;
        }
        rows.push(row);
    }
    let total_cols = n + m + n_art;
    for (i, row) in rows.iter_mut().enumerate() {
        let rhs = row.pop().unwrap();
        row.resize(n + m + n_art, 0.0);
        if let Some(k) = art_col[i] {
            row[n + m + k] = 1.0;
            basis.push(n + m + k);
        } else {
            basis.push(n + i);
        }
        row.push(rhs);
    }

    let pivot = |rows: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let p = rows[r][col];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col].abs() > EPS {
                let f = rows[i][col];
                for j in 0..rows[i].len() {
                    let delta = f * rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        basis[r] = col;
    };

    // Runs Bland's-rule simplex maximizing `obj`; only columns below
    // `col_limit` may enter the basis.
    let optimize =
        |rows: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, obj: &[f64], col_limit: usize| -> bool {
            loop {
                // Reduced costs: obj minus basis contributions.
                let mut reduced = obj.to_vec();
                for (r, &bcol) in basis.iter().enumerate() {
                    let cb = obj[bcol];
                    if cb.abs() > EPS {
                        for j in 0..reduced.len() {
                            reduced[j] -= cb * rows[r][j];
                        }
                    }
                }
                let Some(col) = (0..col_limit).find(|&j| reduced[j] > EPS) else {
                    return true; // optimal
                };
                let mut best: Option<(usize, f64)> = None;
                for r in 0..rows.len() {
                    if rows[r][col] > EPS {
                        let ratio = rows[r].last().unwrap() / rows[r][col];
                        match best {
                            None => best = Some((r, ratio)),
                            Some((br, bratio)) => {
                                if ratio < bratio - EPS
                                    || (ratio < bratio + EPS && basis[r] < basis[br])
                                {
                                    best = Some((r, ratio));
                                }
                            }
                        }
                    }
                }
                let Some((r, _)) = best else {
                    return false; // unbounded
                };
                pivot(rows, basis, r, col);
            }
        };

    if n_art > 0 {
        // Phase 1: minimize sum of artificials = maximize -sum.
        let mut obj = vec![0.0; total_cols];
        for k in 0..n_art {
            obj[n + m + k] = -1.0;
        }
        if !optimize(&mut rows, &mut basis, &obj, total_cols) {
            return None;
        }
        let infeasibility: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &bcol)| bcol >= n + m)
            .map(|(r, _)| rows[r].last().unwrap())
            .sum();
        if infeasibility > 1e-7 {
            return None;
        }
        // Drive remaining (degenerate) artificials out of the basis.
        for r in 0..rows.len() {
            if basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| rows[r][j].abs() > EPS) {
                    pivot(&mut rows, &mut basis, r, col);
                }
            }
        }
    }

    // Phase 2: artificial columns may no longer enter.
    let mut obj = vec![0.0; total_cols];
    obj[..n].copy_from_slice(c);
    if !optimize(&mut rows, &mut basis, &obj, n + m) {
        return None;
    }

    let mut z = vec![0.0; n];
    for (r, &bcol) in basis.iter().enumerate() {
        if bcol < n {
            z[bcol] = *rows[r].last().unwrap();
        }
    }
    Some(z)
}

/// Chebyshev center of `{x : normals[i]·x <= offsets[i]} ∩ [lower, upper]`:
/// the center and radius of the largest inscribed ball. Returns `None` when
/// the region has no interior (radius not strictly positive) or the LP
/// fails.
pub fn chebyshev_center(
    normals: &[Vec<f64>],
    offsets: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let d = lower.len();
    // Variables z = (y_0..y_{d-1}, r) with x = lower + y, y >= 0.
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (n_i, &b_i) in normals.iter().zip(offsets) {
        let norm = n_i.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < EPS {
            continue;
        }
        let mut row: Vec<f64> = n_i.to_vec();
        row.push(norm);
        let shift: f64 = n_i.iter().zip(lower).map(|(n, l)| n * l).sum();
        a.push(row);
        b.push(b_i - shift);
    }
    for i in 0..d {
        // x_i <= upper_i  ->  y_i + r <= upper_i - lower_i
        let mut row = vec![0.0; d + 1];
        row[i] = 1.0;
        row[d] = 1.0;
        a.push(row);
        b.push(upper[i] - lower[i]);
        // x_i >= lower_i  ->  -y_i + r <= 0
        let mut row = vec![0.0; d + 1];
        row[i] = -1.0;
        row[d] = 1.0;
        a.push(row);
        b.push(0.0);
    }
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let z = simplex_max(&a, &b, &c)?;
    let radius = z[d];
    if radius <= 1e-9 {
        return None;
    }
    let center: Vec<f64> = z[..d].iter().zip(lower).map(|(y, l)| y + l).collect();
    Some((center, radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_of_unit_box() {
        let (c, r) = chebyshev_center(&[], &[], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-6 && (c[1] - 0.5).abs() < 1e-6);
        assert!((r - 0.5).abs() < 1e-6);
    }

    #[test]
    fn center_of_triangle() {
        // x + y <= 1 inside the unit box.
        let (c, r) = chebyshev_center(&[vec![1.0, 1.0]], &[1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(r > 0.2 && r < 0.5);
        assert!(c[0] + c[1] <= 1.0 - r * 0.9);
    }

    #[test]
    fn infeasible_region_detected() {
        // x >= 0.8 (i.e. -x <= -0.8) and x <= 0.2.
        let out = chebyshev_center(
            &[vec![-1.0, 0.0], vec![1.0, 0.0]],
            &[-0.8, 0.2],
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert!(out.is_none());
    }

    #[test]
    fn lower_dimensional_region_has_no_interior() {
        // x <= 0.5 and x >= 0.5: a segment, radius 0.
        let out = chebyshev_center(
            &[vec![1.0, 0.0], vec![-1.0, 0.0]],
            &[0.5, -0.5],
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert!(out.is_none());
    }
}
