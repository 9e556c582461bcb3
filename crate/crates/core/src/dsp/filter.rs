//! Zero-phase application of linear-phase FIR filters.

use super::{DspError, FirFilter};
use crate::{Scalar, TimeSeries};

/// Filters `x` forward and then backward, treating the series as periodic.
///
/// The two passes cancel the filter's linear phase and square its amplitude
/// response, so the output is aligned with the input and every DFT bin `w` is
/// scaled by exactly `A(2 pi w / d)^2`.
pub fn apply_zero_phase<T: Scalar>(filter: &FirFilter<T>, x: &TimeSeries<T>) -> Result<TimeSeries<T>, DspError> {
    Ok(TimeSeries::new(apply_zero_phase_values(filter, x.values())?)?)
}

pub(crate) fn apply_zero_phase_values<T: Scalar>(filter: &FirFilter<T>, x: &[T]) -> Result<Vec<T>, DspError> {
    let d = x.len();
    let h = filter.coefficients();
    if h.len() > d {
        return Err(DspError::FilterLongerThanSeries { filter: h.len(), series: d });
    }
    let forward: Vec<T> = (0..d)
        .map(|n| h.iter().enumerate().fold(T::zero(), |acc, (j, &c)| acc + c * x[(n + d - j) % d]))
        .collect();
    Ok((0..d)
        .map(|n| h.iter().enumerate().fold(T::zero(), |acc, (j, &c)| acc + c * forward[(n + j) % d]))
        .collect())
}
