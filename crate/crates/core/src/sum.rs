//! Deterministic floating-point reduction.
//!
//! Every sum over cells, terms or sample points in this crate goes through
//! [`pairwise_sum`]: a fixed binary tree over the input order whose leaves are
//! Neumaier-compensated. The tree shape depends only on the slice length, so
//! the result is identical for any thread count as long as the caller
//! materialises the summands in a fixed order first.

const LEAF: usize = 32;

#[inline]
fn neumaier(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Pairwise (tree) sum with compensated leaves.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return neumaier(values);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sum of absolute values, same reduction order as [`pairwise_sum`].
pub fn pairwise_abs_sum(values: &[f64]) -> f64 {
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    pairwise_sum(&abs)
}

/// Max reduction that ignores NaN; `f64::NEG_INFINITY` for an empty input.
pub fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_leaves_recover_small_terms() {
        let mut v = vec![1.0e16, 1.0, -1.0e16];
        v.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(pairwise_sum(&v), 11.0);
    }

    #[test]
    fn tree_sum_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn abs_sum_and_max() {
        assert_eq!(pairwise_abs_sum(&[-1.5, 2.0, -0.5]), 4.0);
        assert_eq!(max_of([1.0, f64::NAN, 3.0]), 3.0);
        assert_eq!(max_of(std::iter::empty()), f64::NEG_INFINITY);
    }
}
