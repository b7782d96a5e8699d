//! Max-of-affine polytopes `g(a) = max_i w_i·a + b_i` and the logistic
//! surrogate objective fitted by the convex polytope machine.
//!
//! With orientation `s`, the attack predicts member iff `s·g(a) < 0`: for
//! `s = +1` that is the open interior of `{a : g(a) <= 0}`, for `s = -1` its
//! complement.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{dot, sigmoid, softplus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Members inside the polytope.
    Positive,
    /// Members outside the polytope.
    Negative,
}

impl Orientation {
    pub fn value(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Orientation::Positive),
            -1 => Some(Orientation::Negative),
            _ => None,
        }
    }

    pub fn as_sign(self) -> i64 {
        match self {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    /// Row-major `K x dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    orientation: Orientation,
}

impl Polytope {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>, orientation: Orientation) -> Result<Self> {
        let dim = weights.first().map(Vec::len).ok_or(Error::Empty("polytope facets"))?;
        if weights.len() != biases.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: biases.len(),
            });
        }
        let mut flat = Vec::with_capacity(weights.len() * dim);
        for w in &weights {
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: w.len() });
            }
            flat.extend_from_slice(w);
        }
        Self::from_flat(dim, flat, biases, orientation)
    }

    pub fn from_flat(dim: usize, weights: Vec<f64>, biases: Vec<f64>, orientation: Orientation) -> Result<Self> {
        if biases.is_empty() || dim == 0 {
            return Err(Error::Empty("polytope facets"));
        }
        if weights.len() != biases.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: biases.len() * dim,
                found: weights.len(),
            });
        }
        if !weights.iter().chain(&biases).all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("polytope parameters must be finite".into()));
        }
        Ok(Self { dim, weights, biases, orientation })
    }

    /// Facet count `K`.
    pub fn facets(&self) -> usize {
        self.biases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn weights_flat(&self) -> &[f64] {
        &self.weights
    }

    pub fn facet_weights(&self, i: usize) -> &[f64] {
        &self.weights[i * self.dim..(i + 1) * self.dim]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.biases)
    }

    /// `(max_i w_i·a + b_i, argmax)`, ties to the lowest facet.
    pub fn g(&self, a: &[f64]) -> Result<(f64, usize)> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a.len() });
        }
        Ok(self.g_unchecked(a))
    }

    pub(crate) fn g_unchecked(&self, a: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (w, &b)) in self.weights.chunks_exact(self.dim).zip(&self.biases).enumerate() {
            let v = dot(w, a) + b;
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// `1[s·g(a) < 0]`.
    pub fn member_decision(&self, a: &[f64]) -> Result<bool> {
        let (g, _) = self.g(a)?;
        Ok(self.orientation.value() * g < 0.0)
    }

    /// Pads to `k` facets by cycling through copies of the existing ones;
    /// `g` is unchanged.
    pub fn padded_to(&self, k: usize) -> Polytope {
        let old = self.facets();
        let mut weights = Vec::with_capacity(k * self.dim);
        let mut biases = Vec::with_capacity(k);
        for i in 0..k.max(old) {
            let src = i % old;
            weights.extend_from_slice(self.facet_weights(src));
            biases.push(self.biases[src]);
        }
        Polytope {
            dim: self.dim,
            weights,
            biases,
            orientation: self.orientation,
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }
}

/// `ln(1 + exp(-t·v))` for a label `t = ±1`, in softplus form.
pub fn logistic_loss(v: f64, t: f64) -> f64 {
    softplus(-t * v)
}

/// Derivative of [`logistic_loss`] with respect to `v`.
pub fn logistic_loss_derivative(v: f64, t: f64) -> f64 {
    -t * sigmoid(-t * v)
}

fn check_sets<A: AsRef<[f64]>>(members: &[A], nonmembers: &[A]) -> Result<()> {
    if members.is_empty() {
        return Err(Error::Empty("member features"));
    }
    if nonmembers.is_empty() {
        return Err(Error::Empty("nonmember features"));
    }
    Ok(())
}

fn check_dims<A: AsRef<[f64]>>(polytope: &Polytope, sets: [&[A]; 2]) -> Result<()> {
    for set in sets {
        for a in set {
            if a.as_ref().len() != polytope.dim {
                return Err(Error::DimensionMismatch {
                    expected: polytope.dim,
                    found: a.as_ref().len(),
                });
            }
        }
    }
    Ok(())
}

// Members carry label -1 (pushed to s·g < 0), nonmembers +1.
const MEMBER_LABEL: f64 = -1.0;
const NONMEMBER_LABEL: f64 = 1.0;

/// Mean member loss `ℓ(s·g, -1)` plus mean nonmember loss `ℓ(s·g, +1)`.
pub fn cpm_objective<A: AsRef<[f64]>>(polytope: &Polytope, members: &[A], nonmembers: &[A]) -> Result<f64> {
    check_sets(members, nonmembers)?;
    check_dims(polytope, [members, nonmembers])?;
    Ok(objective_unchecked(polytope, members, nonmembers))
}

pub(crate) fn objective_unchecked<A: AsRef<[f64]>>(polytope: &Polytope, members: &[A], nonmembers: &[A]) -> f64 {
    let s = polytope.orientation.value();
    let mean = |set: &[A], t: f64| {
        set.iter()
            .map(|a| logistic_loss(s * polytope.g_unchecked(a.as_ref()).0, t))
            .sum::<f64>()
            / set.len() as f64
    };
    mean(members, MEMBER_LABEL) + mean(nonmembers, NONMEMBER_LABEL)
}

/// Gradient of [`cpm_objective`] with respect to the facet parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeGradient {
    /// Row-major `K x dim`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Subgradient of [`cpm_objective`]: each sample's gradient flows only into
/// its argmax facet (lowest index on ties).
pub fn cpm_subgradient<A: AsRef<[f64]>>(
    polytope: &Polytope,
    members: &[A],
    nonmembers: &[A],
) -> Result<PolytopeGradient> {
    check_sets(members, nonmembers)?;
    check_dims(polytope, [members, nonmembers])?;
    let mut grad = PolytopeGradient {
        weights: vec![0.0; polytope.weights.len()],
        biases: vec![0.0; polytope.biases.len()],
    };
    accumulate_subgradient(polytope, members.iter().map(AsRef::as_ref), members.len(), MEMBER_LABEL, &mut grad);
    accumulate_subgradient(
        polytope,
        nonmembers.iter().map(AsRef::as_ref),
        nonmembers.len(),
        NONMEMBER_LABEL,
        &mut grad,
    );
    Ok(grad)
}

pub(crate) fn accumulate_subgradient<'a>(
    polytope: &Polytope,
    samples: impl Iterator<Item = &'a [f64]>,
    count: usize,
    label: f64,
    grad: &mut PolytopeGradient,
) {
    let s = polytope.orientation.value();
    let scale = 1.0 / count as f64;
    let dim = polytope.dim;
    for a in samples {
        let (g, facet) = polytope.g_unchecked(a);
        // d/dg ℓ(s·g, t) = s·ℓ'(s·g, t)
        let coef = scale * s * logistic_loss_derivative(s * g, label);
        let row = &mut grad.weights[facet * dim..(facet + 1) * dim];
        for (gw, &x) in row.iter_mut().zip(a) {
            *gw += coef * x;
        }
        grad.biases[facet] += coef;
    }
}

/// Mean member decision over `members` minus the mean over `others`.
pub fn cpm_advantage<A: AsRef<[f64]>>(polytope: &Polytope, members: &[A], others: &[A]) -> Result<f64> {
    check_sets(members, others)?;
    check_dims(polytope, [members, others])?;
    let rate = |set: &[A]| {
        let inside = set
            .iter()
            .filter(|a| polytope.orientation.value() * polytope.g_unchecked(a.as_ref()).0 < 0.0)
            .count();
        inside as f64 / set.len() as f64
    };
    Ok(rate(members) - rate(others))
}
