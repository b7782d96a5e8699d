//! Dense phase-1 simplex for tiny feasibility problems.

use alloc::vec;
use alloc::vec::Vec;

/// Entries smaller than this are treated as zero when pivoting.
const PIVOT_EPS: f64 = 1e-12;

/// Finds `x >= 0` with `A x = b`, where `a` is row-major with one entry per
/// equality. Returns `None` when the minimal total artificial value exceeds
/// `tol`.
///
/// Bland's rule keeps the method from cycling; an iteration cap guards
/// against floating-point stalls.
pub(crate) fn feasible_point(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; (m + 1) * width];
    let mut basis: Vec<usize> = (n..n + m).collect();
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * width + j] = sign * a[i][j];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + rhs] = sign * b[i];
    }
    // Objective row holds reduced costs of "minimize sum of artificials".
    let obj = m * width;
    for i in 0..m {
        for j in 0..n {
            t[obj + j] -= t[i * width + j];
        }
        t[obj + rhs] -= t[i * width + rhs];
    }

    let max_iter = 50 * (n + m + 1);
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| t[obj + j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > PIVOT_EPS {
                let ratio = t[i * width + rhs] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[l]),
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            // Unbounded in phase 1 cannot happen (objective is bounded below).
            break;
        };
        pivot(&mut t, width, m, r, enter);
        basis[r] = enter;
    }

    if -t[obj + rhs] > tol {
        return None;
    }
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i * width + rhs].max(0.0);
        }
    }
    Some(x)
}

fn pivot(t: &mut [f64], width: usize, m: usize, r: usize, c: usize) {
    let p = t[r * width + c];
    for j in 0..width {
        t[r * width + j] /= p;
    }
    for i in 0..=m {
        if i == r {
            continue;
        }
        let f = t[i * width + c];
        if f != 0.0 {
            for j in 0..width {
                t[i * width + j] -= f * t[r * width + j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_solution() {
        // x0 + x1 = 1, x0 - x1 = 0.5
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let x = feasible_point(&a, &[1.0, 0.5], 1e-9).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-12);
        assert!((x[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 = 1 and x0 + x1 = 2
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(feasible_point(&a, &[1.0, 2.0], 1e-9).is_none());
        // x0 = -1 with x0 >= 0
        assert!(feasible_point(&[vec![1.0]], &[-1.0], 1e-9).is_none());
    }

    #[test]
    fn handles_negative_rhs_and_redundant_rows() {
        let a = vec![vec![-1.0, 0.0], vec![-2.0, 0.0], vec![0.0, 1.0]];
        let x = feasible_point(&a, &[-2.0, -4.0, 0.0], 1e-9).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }
}
