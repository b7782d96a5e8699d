//! Scalar helpers shared by the scores, the surrogate loss and the MLP.
//!
//! All transcendental functions go through `libm`, so results are identical
//! with and without `std` and across platforms.

/// Lower clamp applied to every probability before taking a logarithm.
pub const EPS_CLAMP: f64 = 1e-12;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `ln p` with `p` clamped to `[EPS_CLAMP, 1]`.
#[inline]
pub fn clamped_ln(p: f64) -> f64 {
    ln(p.clamp(EPS_CLAMP, 1.0))
}

/// `ln(1 - p)` with `1 - p` clamped to `[EPS_CLAMP, 1]`.
#[inline]
pub fn clamped_ln_complement(p: f64) -> f64 {
    ln((1.0 - p).clamp(EPS_CLAMP, 1.0))
}

/// `x ln x` extended continuously by `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ln(x)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(exp(-x))
    } else {
        libm::log1p(exp(x))
    }
}

/// Logistic function `1 / (1 + e^{-x})` without overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax, in place.
pub fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = exp(*v - max);
        total += *v;
    }
    for v in logits.iter_mut() {
        *v /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_eq!(softplus(1e8), 1e8);
        assert_eq!(softplus(-1e8), 0.0);
        assert!((softplus(0.0) - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn softmax_handles_large_logits() {
        let mut v = [1000.0, 0.0];
        softmax_in_place(&mut v);
        assert_eq!(v[0], 1.0);
        assert!(v[1] < 1e-300);
    }
}
