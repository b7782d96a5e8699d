use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{gap, lp, DiscrepancyResult, Direction, PointSet, Witness, FEASIBILITY_TOL};
use crate::{Error, Result};

/// Enumeration guard: at most this many points per class.
pub const CONVEX_MAX_PER_CLASS: usize = 16;

/// True iff `q` is a convex combination of `hull` (boundary included).
///
/// # Panics
/// If `hull` is empty.
pub fn hull_contains(hull: &[&[f64]], q: &[f64]) -> bool {
    assert!(!hull.is_empty(), "hull_contains needs at least one hull point");
    if hull.contains(&q) {
        return true;
    }
    if hull.len() == 1 {
        return false;
    }
    // Rows: one per coordinate plus sum(lambda) = 1.
    let d = q.len();
    let mut a = Vec::with_capacity(d + 1);
    let mut b = Vec::with_capacity(d + 1);
    for k in 0..d {
        a.push(hull.iter().map(|p| p[k]).collect::<Vec<f64>>());
        b.push(q[k]);
    }
    a.push(vec![1.0; hull.len()]);
    b.push(1.0);
    lp::feasible_point(&a, &b, FEASIBILITY_TOL).is_some()
}

struct Best {
    value: f64,
    mask: u32,
    inside_in: Vec<usize>,
    outside_in: Vec<usize>,
}

/// Best hull of a subset of `inside` for `fraction(inside) - fraction(outside)`.
fn best_hull(inside: &[Vec<f64>], outside: &[Vec<f64>]) -> Best {
    let (m, n) = (inside.len(), outside.len());
    let mut best = Best {
        value: 0.0,
        mask: 0,
        inside_in: Vec::new(),
        outside_in: Vec::new(),
    };
    let mut hull: Vec<&[f64]> = Vec::with_capacity(m);
    for mask in 1u32..(1u32 << m) {
        hull.clear();
        hull.extend((0..m).filter(|i| mask & (1 << i) != 0).map(|i| inside[i].as_slice()));
        let inside_in: Vec<usize> = (0..m)
            .filter(|&i| mask & (1 << i) != 0 || hull_contains(&hull, &inside[i]))
            .collect();
        // No outside point can make this subset better than the best so far.
        if (inside_in.len() as f64 / m as f64) <= best.value {
            continue;
        }
        let outside_in: Vec<usize> = (0..n).filter(|&j| hull_contains(&hull, &outside[j])).collect();
        let value = gap(Direction::MembersInside, inside_in.len(), m, outside_in.len(), n);
        if value > best.value {
            best = Best { value, mask, inside_in, outside_in };
        }
    }
    best
}

/// Exact discrepancy over closed convex sets, both directions.
///
/// Ties keep the members-inside direction and the lowest subset bitmask.
pub fn exact_convex_discrepancy(points: &PointSet) -> Result<DiscrepancyResult> {
    let (m, n) = (points.members().len(), points.nonmembers().len());
    if m > CONVEX_MAX_PER_CLASS || n > CONVEX_MAX_PER_CLASS {
        return Err(Error::SizeGuard(format!(
            "convex oracle enumerates subsets of each class; got {m} members and {n} nonmembers, limit is {CONVEX_MAX_PER_CLASS} per class"
        )));
    }
    let fwd = best_hull(points.members(), points.nonmembers());
    let bwd = best_hull(points.nonmembers(), points.members());
    let indices = |mask: u32, len: usize| (0..len).filter(|i| mask & (1 << i) != 0).collect();
    Ok(if bwd.value > fwd.value {
        DiscrepancyResult {
            value: bwd.value,
            direction: Direction::NonmembersInside,
            witness: Witness::Hull { indices: indices(bwd.mask, n) },
            members_in: bwd.outside_in,
            nonmembers_in: bwd.inside_in,
        }
    } else {
        DiscrepancyResult {
            value: fwd.value,
            direction: Direction::MembersInside,
            witness: Witness::Hull { indices: indices(fwd.mask, m) },
            members_in: fwd.inside_in,
            nonmembers_in: fwd.outside_in,
        }
    })
}
