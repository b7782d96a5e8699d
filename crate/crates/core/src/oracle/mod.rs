//! Exact two-sample discrepancy on tiny point sets.
//!
//! The discrepancy of a family of sets is the largest gap
//! `|fraction of members in Q - fraction of nonmembers in Q|` over sets `Q`
//! in the family. Two families are computed exactly by enumeration:
//!
//! - closed convex sets ([`exact_convex_discrepancy`]): an optimal set can
//!   always be shrunk to the hull of the inside-class points it contains,
//!   so it suffices to try the hull of every subset of one class;
//! - closed halfspaces ([`exact_halfspace_discrepancy`]): hyperplanes
//!   through affinely independent point tuples, with points on the
//!   hyperplane split recursively inside it.
//!
//! Values are exact for the empirical samples given; the halfspace value is
//! never larger than the convex one.

mod convex;
mod halfspace;
mod lp;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use convex::{exact_convex_discrepancy, hull_contains, CONVEX_MAX_PER_CLASS};
pub use halfspace::{exact_halfspace_discrepancy, HALFSPACE_MAX_DIM, HALFSPACE_MAX_POINTS};

/// Residual tolerance for feasibility and on-hyperplane tests.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    members: Vec<Vec<f64>>,
    nonmembers: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(members: Vec<Vec<f64>>, nonmembers: Vec<Vec<f64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("members"));
        }
        if nonmembers.is_empty() {
            return Err(Error::Empty("nonmembers"));
        }
        let dim = members[0].len();
        if dim == 0 {
            return Err(Error::Oracle("points must have dimension >= 1".into()));
        }
        for p in members.iter().chain(&nonmembers) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Oracle(format!("non-finite coordinate in {p:?}")));
            }
        }
        Ok(Self { dim, members, nonmembers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn nonmembers(&self) -> &[Vec<f64>] {
        &self.nonmembers
    }

    /// Applies `x -> M x + t` to every point.
    pub fn map_affine(&self, matrix: &[Vec<f64>], shift: &[f64]) -> Result<Self> {
        let map = |p: &Vec<f64>| -> Vec<f64> {
            matrix
                .iter()
                .zip(shift)
                .map(|(row, t)| row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + t)
                .collect()
        };
        Self::new(self.members.iter().map(map).collect(), self.nonmembers.iter().map(map).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    MembersInside,
    NonmembersInside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    /// Hull of these points of the inside class (indices into that class).
    Hull { indices: Vec<usize> },
    /// Closed halfspace `{x : normal . x + offset >= 0}`, plus the tuple of
    /// points whose hyperplane produced it (indices into members followed by
    /// nonmembers). `normal` is empty for the trivial all/none sets.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
        support: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    pub direction: Direction,
    pub witness: Witness,
    /// Members inside the witness set.
    pub members_in: Vec<usize>,
    /// Nonmembers inside the witness set.
    pub nonmembers_in: Vec<usize>,
}

impl DiscrepancyResult {
    /// Recomputes the fraction gap from the inside lists.
    pub fn recount(&self, points: &PointSet) -> f64 {
        gap(self.direction, self.members_in.len(), points.members.len(), self.nonmembers_in.len(), points.nonmembers.len())
    }
}

pub(crate) fn gap(direction: Direction, m_in: usize, m: usize, n_in: usize, n: usize) -> f64 {
    let fm = m_in as f64 / m as f64;
    let fn_ = n_in as f64 / n as f64;
    match direction {
        Direction::MembersInside => fm - fn_,
        Direction::NonmembersInside => fn_ - fm,
    }
}
