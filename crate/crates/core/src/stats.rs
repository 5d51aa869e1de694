//! Small statistics kernels: mean/std, Pearson correlation, Wilson score
//! intervals. Generic over the scalar type.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// z for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

/// Population mean and standard deviation. `None` for empty input.
pub fn mean_std<F: Scalar>(xs: &[F]) -> Option<(F, F)> {
    if xs.is_empty() {
        return None;
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Some((xs[0], F::zero()));
    }
    let n = F::from_count(xs.len());
    let mean = xs.iter().copied().sum::<F>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>() / n;
    Some((mean, var.sqrt()))
}

/// Pearson correlation of paired samples.
///
/// Returns `None` when fewer than two pairs are given or either side has
/// zero variance, so callers can tell "undefined" apart from "0".
pub fn pearson<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    assert_eq!(xs.len(), ys.len(), "pearson: unequal sample lengths");
    if xs.len() < 2 {
        return None;
    }
    let n = F::from_count(xs.len());
    let mx = xs.iter().copied().sum::<F>() / n;
    let my = ys.iter().copied().sum::<F>() / n;
    let (mut sxy, mut sxx, mut syy) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return None;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Some(r.max(-F::one()).min(F::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval<F> {
    pub low: F,
    pub high: F,
}

/// Wilson score interval for `successes` out of `n` trials.
///
/// `n == 0` yields the uninformative interval `[0, 1]`.
pub fn wilson_interval<F: Scalar>(successes: usize, n: usize, z: F) -> WilsonInterval<F> {
    assert!(successes <= n, "successes exceed trials");
    if n == 0 {
        return WilsonInterval {
            low: F::zero(),
            high: F::one(),
        };
    }
    let nf = F::from_count(n);
    let p = F::from_count(successes) / nf;
    let z2 = z * z;
    let two = F::lit(2.0);
    let four = F::lit(4.0);
    let denom = F::one() + z2 / nf;
    let center = (p + z2 / (two * nf)) / denom;
    let half = z / denom * (p * (F::one() - p) / nf + z2 / (four * nf * nf)).sqrt();
    WilsonInterval {
        low: (center - half).max(F::zero()).min(p),
        high: (center + half).min(F::one()).max(p),
    }
}
