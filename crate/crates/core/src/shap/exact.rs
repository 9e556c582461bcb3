use super::ShapError;
use crate::{ImpactVector, Scalar};

pub const MAX_EXACT_FRAGMENTS: usize = 20;

/// Classic Shapley values of the game `values`, indexed by bitmask
/// (bit `k` set means fragment `k` is present).
///
/// `values[0]` becomes the base value and the last entry the prediction.
pub fn exact_shapley<T: Scalar>(values: &[T]) -> Result<ImpactVector<T>, ShapError> {
    let n = values.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(ShapError::InvalidGame(n));
    }
    let d = n.trailing_zeros() as usize;
    if d > MAX_EXACT_FRAGMENTS {
        return Err(ShapError::TooManyFragments(d));
    }
    // s! (d - s - 1)! / d! for every coalition size s < d
    let mut factor = vec![T::zero(); d];
    let mut binom = 1.0f64;
    for (s, f) in factor.iter_mut().enumerate() {
        *f = T::lit(1.0 / (d as f64 * binom));
        binom = binom * (d - 1 - s) as f64 / (s + 1) as f64;
    }
    let mut phi = vec![T::zero(); d];
    for (k, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << k;
        let mut acc = T::zero();
        for mask in (0..n).filter(|m| m & bit == 0) {
            let size = mask.count_ones() as usize;
            acc = acc + factor[size] * (values[mask | bit] - values[mask]);
        }
        *p = acc;
    }
    Ok(ImpactVector::new(phi, values[0], values[n - 1])?)
}
