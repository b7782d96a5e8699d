use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{gap, lp, DiscrepancyResult, Direction, PointSet, Witness, FEASIBILITY_TOL};
use crate::math::{abs, sqrt};
use crate::{Error, Result};

pub const HALFSPACE_MAX_POINTS: usize = 30;
pub const HALFSPACE_MAX_DIM: usize = 4;

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    inside: Vec<usize>,
    support: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalizes `vectors`, dropping those within `tol` of the span so far.
fn orthonormal_basis<'a>(vectors: impl Iterator<Item = Vec<f64>> + 'a, tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for q in &basis {
            let c = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let norm = sqrt(dot(&v, &v));
        if norm > tol {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    basis
}

/// Unit normal to the `r - 1` vectors `diffs` in `R^r`, or `None` when they
/// are linearly dependent.
fn normal_to(diffs: &[Vec<f64>], r: usize, tol: f64) -> Option<Vec<f64>> {
    let basis = orthonormal_basis(diffs.iter().cloned(), tol);
    if basis.len() + 1 != r {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..r {
        let mut e = vec![0.0; r];
        e[k] = 1.0;
        for q in &basis {
            let c = q[k];
            e.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let norm = sqrt(dot(&e, &e));
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, e));
        }
    }
    let (norm, mut e) = best?;
    e.iter_mut().for_each(|a| *a /= norm);
    Some(e)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Maximum total weight of a set cut out by a closed halfspace from the
/// points `ids` (with coordinates `coords`).
///
/// Candidates are the empty and full sets and, for every hyperplane through
/// an affinely independent tuple, the points strictly on one side plus the
/// best split of the points on the hyperplane, found recursively in its
/// lower-dimensional affine hull.
fn best_weighted(ids: &[usize], coords: &[Vec<f64>], weights: &[f64], tol: f64) -> Candidate {
    let mut best = Candidate {
        value: 0.0,
        inside: Vec::new(),
        support: Vec::new(),
    };
    if ids.is_empty() {
        return best;
    }
    let total: f64 = ids.iter().map(|&i| weights[i]).sum();
    if total > best.value {
        best = Candidate {
            value: total,
            inside: ids.to_vec(),
            support: Vec::new(),
        };
    }
    let origin = &coords[0];
    let diffs = coords.iter().skip(1).map(|c| c.iter().zip(origin).map(|(a, b)| a - b).collect());
    let basis = orthonormal_basis(diffs, tol);
    let r = basis.len();
    if r == 0 {
        return best;
    }
    let proj: Vec<Vec<f64>> = coords
        .iter()
        .map(|c| {
            let centered: Vec<f64> = c.iter().zip(origin).map(|(a, b)| a - b).collect();
            basis.iter().map(|q| dot(q, &centered)).collect()
        })
        .collect();

    for_each_combination(ids.len(), r, |tuple| {
        let base = &proj[tuple[0]];
        let tuple_diffs: Vec<Vec<f64>> = tuple[1..]
            .iter()
            .map(|&t| proj[t].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let Some(normal) = normal_to(&tuple_diffs, r, tol) else {
            return;
        };
        let h = dot(&normal, base);
        let side: Vec<f64> = proj.iter().map(|p| dot(&normal, p) - h).collect();
        let on: Vec<usize> = (0..ids.len()).filter(|&i| abs(side[i]) <= tol).collect();
        let on_ids: Vec<usize> = on.iter().map(|&i| ids[i]).collect();
        let on_coords: Vec<Vec<f64>> = on.iter().map(|&i| proj[i].clone()).collect();
        let sub = best_weighted(&on_ids, &on_coords, weights, tol);
        for orient in [1.0, -1.0] {
            let strict: Vec<usize> = (0..ids.len()).filter(|&i| orient * side[i] > tol).map(|i| ids[i]).collect();
            let value = strict.iter().map(|&i| weights[i]).sum::<f64>() + sub.value;
            if value > best.value {
                let mut inside = strict;
                inside.extend_from_slice(&sub.inside);
                inside.sort_unstable();
                best = Candidate {
                    value,
                    inside,
                    support: tuple.iter().map(|&t| ids[t]).collect(),
                };
            }
        }
    });
    best
}

/// Finds `(w, c)` with `w.x + c >= 1` on `inside` and `<= -1` on the rest.
fn separating_halfspace(points: &[&[f64]], inside: &[bool]) -> Option<(Vec<f64>, f64)> {
    let d = points[0].len();
    let n = points.len();
    // Columns: w+ (d), w- (d), c+, c-, one slack per point.
    let cols = 2 * d + 2 + n;
    let mut a = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let s = if inside[i] { 1.0 } else { -1.0 };
        let mut row = vec![0.0; cols];
        for k in 0..d {
            row[k] = s * p[k];
            row[d + k] = -s * p[k];
        }
        row[2 * d] = s;
        row[2 * d + 1] = -s;
        row[2 * d + 2 + i] = -1.0;
        a.push(row);
    }
    let x = lp::feasible_point(&a, &vec![1.0; n], FEASIBILITY_TOL)?;
    let w = (0..d).map(|k| x[k] - x[d + k]).collect();
    Some((w, x[2 * d] - x[2 * d + 1]))
}

/// Exact discrepancy over closed halfspaces, both directions.
pub fn exact_halfspace_discrepancy(points: &PointSet) -> Result<DiscrepancyResult> {
    let (m, n, d) = (points.members().len(), points.nonmembers().len(), points.dim());
    if m + n > HALFSPACE_MAX_POINTS || d > HALFSPACE_MAX_DIM {
        return Err(Error::SizeGuard(format!(
            "halfspace oracle enumerates point tuples; got {} points in dimension {d}, limit is {HALFSPACE_MAX_POINTS} points and dimension {HALFSPACE_MAX_DIM}",
            m + n
        )));
    }
    let all: Vec<&[f64]> = points.members().iter().chain(points.nonmembers()).map(Vec::as_slice).collect();
    let coords: Vec<Vec<f64>> = all.iter().map(|p| p.to_vec()).collect();
    let scale = coords.iter().flatten().fold(1.0f64, |acc, v| acc.max(abs(*v)));
    let tol = FEASIBILITY_TOL * scale;
    let ids: Vec<usize> = (0..m + n).collect();

    let fwd_w: Vec<f64> = (0..m + n).map(|i| if i < m { 1.0 / m as f64 } else { -1.0 / n as f64 }).collect();
    let bwd_w: Vec<f64> = fwd_w.iter().map(|w| -w).collect();
    let fwd = best_weighted(&ids, &coords, &fwd_w, tol);
    let bwd = best_weighted(&ids, &coords, &bwd_w, tol);
    let (cand, direction) = if bwd.value > fwd.value {
        (bwd, Direction::NonmembersInside)
    } else {
        (fwd, Direction::MembersInside)
    };

    let mut mask = vec![false; m + n];
    cand.inside.iter().for_each(|&i| mask[i] = true);
    let members_in: Vec<usize> = (0..m).filter(|&i| mask[i]).collect();
    let nonmembers_in: Vec<usize> = (0..n).filter(|&j| mask[m + j]).collect();
    let (normal, offset) = if cand.inside.is_empty() {
        (Vec::new(), -1.0)
    } else if cand.inside.len() == m + n {
        (Vec::new(), 1.0)
    } else {
        separating_halfspace(&all, &mask)
            .ok_or_else(|| Error::Oracle("could not realize the optimal split as a halfspace".into()))?
    };
    let value = gap(direction, members_in.len(), m, nonmembers_in.len(), n);
    Ok(DiscrepancyResult {
        value,
        direction,
        witness: Witness::Halfspace {
            normal,
            offset,
            support: cand.support,
        },
        members_in,
        nonmembers_in,
    })
}
