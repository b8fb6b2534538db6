//! Centralized brute-force references.
//!
//! Nothing here shares code with the distributed solver; these functions are
//! what the solver gets checked against.

use crate::error::{Error, Result};

/// Minimizer set of `sum_i |x - s_i|`: a single point for odd counts, the
/// closed interval between the two middle order statistics for even counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianInterval {
    pub lo: f64,
    pub hi: f64,
}

impl MedianInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn distance(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

pub fn median_interval(s: &[f64]) -> Result<MedianInterval> {
    if s.is_empty() {
        return Err(Error::invalid("s", "median of an empty list"));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("s", "values must be finite"));
    }
    let mut sorted = s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        MedianInterval {
            lo: sorted[n / 2],
            hi: sorted[n / 2],
        }
    } else {
        MedianInterval {
            lo: sorted[n / 2 - 1],
            hi: sorted[n / 2],
        }
    })
}

pub fn l1_objective(x: f64, s: &[f64]) -> f64 {
    s.iter().map(|v| (x - v).abs()).sum()
}

/// Per-node x-minimization objective `|x - s| + zsum x + (c d / 2) x^2`.
pub fn prox_objective(x: f64, s: f64, zsum: f64, c: f64, d: usize) -> f64 {
    (x - s).abs() + zsum * x + 0.5 * c * d as f64 * x * x
}

/// Exhaustive scan of `lo, lo + h, ..., hi` for the minimizer of
/// [`prox_objective`]. Ties go to the smaller `x`.
///
/// Grid points are `lo + k (hi - lo) / N` with `N = round((hi - lo) / step)`,
/// so a symmetric range hits `0` exactly.
pub fn prox_grid_argmin(s: f64, zsum: f64, c: f64, d: usize, lo: f64, hi: f64, step: f64) -> f64 {
    assert!(lo < hi && step > 0.0, "empty grid");
    grid_argmin(lo, hi, step, |x| prox_objective(x, s, zsum, c, d))
}

/// Range `[min - 1, max + 1]` over the three stationary candidates of the
/// prox objective (both clamp points and `s`).
pub fn prox_search_range(s: f64, zsum: f64, c: f64, d: usize) -> (f64, f64) {
    let scale = c * d as f64;
    let candidates = [(-1.0 - zsum) / scale, (1.0 - zsum) / scale, s];
    let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - 1.0, hi + 1.0)
}

/// Grid minimizer of the L1 objective over `[lo, hi]`.
pub fn l1_grid_argmin(s: &[f64], lo: f64, hi: f64, step: f64) -> f64 {
    assert!(lo < hi && step > 0.0, "empty grid");
    grid_argmin(lo, hi, step, |x| l1_objective(x, s))
}

fn grid_argmin(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let span = hi - lo;
    let n = (span / step).round().max(1.0) as u64;
    let mut best = (f(lo), lo);
    for k in 1..=n {
        let x = lo + (k as f64 * span) / n as f64;
        let v = f(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_examples() {
        assert_eq!(median_interval(&[3.0, 1.0, 2.0]).unwrap(), MedianInterval { lo: 2.0, hi: 2.0 });
        assert_eq!(
            median_interval(&[4.0, 1.0, 3.0, 2.0]).unwrap(),
            MedianInterval { lo: 2.0, hi: 3.0 }
        );
        assert_eq!(median_interval(&[7.0]).unwrap(), MedianInterval { lo: 7.0, hi: 7.0 });
        assert!(median_interval(&[]).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_objective(2.0, &[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(l1_objective(0.0, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn median_interval_attains_grid_minimum() {
        let s = [0.7, -1.3, 2.2, 0.1];
        let m = median_interval(&s).unwrap();
        let step: f64 = 1e-4;
        let (lo, hi): (f64, f64) = (-2.3, 3.2);
        let span = hi - lo;
        let n = (span / step).round() as u64;
        let grid_min = (0..=n)
            .map(|k| l1_objective(lo + k as f64 * span / n as f64, &s))
            .fold(f64::INFINITY, f64::min);
        for x in [m.lo, m.midpoint(), m.hi] {
            assert!(l1_objective(x, &s) <= grid_min + 1e-12);
        }
    }

    #[test]
    fn prox_grid_examples() {
        let x = prox_grid_argmin(2.0, 0.0, 1.0, 2, -20.0, 20.0, 1e-4);
        assert!((x - 0.5).abs() <= 1e-4);
        assert_eq!(prox_grid_argmin(0.0, 0.0, 1.0, 2, -20.0, 20.0, 1e-4), 0.0);
        let x = prox_grid_argmin(0.0, 3.0, 1.0, 1, -20.0, 20.0, 1e-4);
        assert!((x + 2.0).abs() <= 1e-4);
    }

    #[test]
    fn ties_go_left() {
        // |x| on a grid that straddles 0 symmetrically without containing it
        // is tied at +-h/2.
        let x = grid_argmin(-1.5, 1.5, 1.0, |x| x.abs());
        assert_eq!(x, -0.5);
    }

    proptest! {
        #[test]
        fn median_permutation_invariant(mut s in prop::collection::vec(-100.0..100.0f64, 1..20), shift in -50.0..50.0f64) {
            let m = median_interval(&s).unwrap();
            s.reverse();
            prop_assert_eq!(median_interval(&s).unwrap(), m);
            let shifted: Vec<f64> = s.iter().map(|v| v + shift).collect();
            let ms = median_interval(&shifted).unwrap();
            prop_assert!((ms.lo - (m.lo + shift)).abs() < 1e-9);
            prop_assert!((ms.hi - (m.hi + shift)).abs() < 1e-9);
        }

        #[test]
        fn odd_grid_minimizer_is_median(s in prop::collection::hash_set(-200i32..200, 1..8)) {
            let mut s: Vec<f64> = s.into_iter().map(|v| v as f64 / 40.0).collect();
            if s.len().is_multiple_of(2) {
                s.pop();
            }
            let m = median_interval(&s).unwrap();
            let x = l1_grid_argmin(&s, -6.0, 6.0, 1e-3);
            prop_assert!((x - m.lo).abs() <= 1e-3);
        }
    }
}
