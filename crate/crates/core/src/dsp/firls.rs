//! Least-squares linear-phase FIR bandstop design.
//!
//! A type I filter of odd length `L = 2M + 1` has the real amplitude response
//! `A(w) = sum_{n=0}^{M} a_n cos(n w)` with `h[M] = a_0` and
//! `h[M - n] = h[M + n] = a_n / 2`. The design minimises
//! `int_0^pi (A(w) - D(w))^2 dw` for a piecewise-linear desired response `D`
//! (gain 0 on stop bands, 1 elsewhere, one-bin linear ramps at band edges)
//! subject to unit DC gain `A(0) = 1`.

use super::DspError;
use crate::linalg::{Cholesky, SquareMatrix};
use crate::Scalar;

/// Linear-phase FIR impulse response of odd length.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> FirFilter<T> {
    pub fn new(coefficients: Vec<T>) -> Result<Self, DspError> {
        let len = coefficients.len();
        if len.is_multiple_of(2) {
            return Err(DspError::InvalidFilterLength { length: len, reason: "length must be odd" });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(DspError::AsymmetricFilter);
        }
        let scale = coefficients.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        let tol = T::tolerance(1e-10, scale);
        if (0..len / 2).any(|i| (coefficients[i] - coefficients[len - 1 - i]).abs() > tol) {
            return Err(DspError::AsymmetricFilter);
        }
        Ok(Self { coefficients })
    }

    /// The single-tap filter `[1]`.
    pub fn identity() -> Self {
        Self { coefficients: vec![T::one()] }
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Real amplitude response at angular frequency `omega` (radians per sample).
    pub fn amplitude(&self, omega: T) -> T {
        let m = self.coefficients.len() / 2;
        let two = T::lit(2.0);
        (1..=m).fold(self.coefficients[m], |acc, n| {
            acc + two * self.coefficients[m - n] * (T::from_usize_exact(n) * omega).cos()
        })
    }

    /// Amplitude response at DFT bin `bin` of a length-`d` series.
    pub fn amplitude_at_bin(&self, bin: usize, d: usize) -> T {
        self.amplitude(T::TAU() * T::from_usize_exact(bin) / T::from_usize_exact(d))
    }

    pub fn dc_gain(&self) -> T {
        self.coefficients.iter().copied().sum()
    }
}

/// Largest odd integer `<= max(d/2, 3)`.
pub fn default_filter_length(d: usize) -> usize {
    let m = (d / 2).max(3);
    if m % 2 == 1 {
        m
    } else {
        m - 1
    }
}

/// Stop bands validated against a series length, with touching bands merged.
fn normalize_bands(bands: &[(usize, usize)], d: usize) -> Result<Vec<(usize, usize)>, DspError> {
    let top = d / 2;
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(bands.len());
    for &(lo, hi) in bands {
        if lo < 1 || hi < lo || hi > top {
            return Err(DspError::BandOutOfRange { low: lo, high: hi, max_bin: top });
        }
        match merged.last_mut() {
            Some(prev) if lo <= prev.1 => return Err(DspError::OverlappingBands { first: *prev, second: (lo, hi) }),
            Some(prev) if lo == prev.1 + 1 => prev.1 = hi,
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged)
}

/// Desired response knots `(bin position, gain)` over `[0, d/2]`.
fn desired_knots<T: Scalar>(bands: &[(usize, usize)], d: usize) -> Vec<(T, T)> {
    let (one, zero) = (T::one(), T::zero());
    let at = |b: usize| T::from_usize_exact(b);
    let mut knots = vec![(zero, one)];
    for &(lo, hi) in bands {
        knots.push((at(lo - 1), one));
        knots.push((at(lo), zero));
        knots.push((at(hi), zero));
        knots.push((at(hi + 1), one));
    }
    let end = at(d) / T::lit(2.0);
    if knots.last().is_none_or(|k| k.0 < end) {
        knots.push((end, one));
    }
    // clip the polyline at the Nyquist frequency
    let mut clipped = Vec::with_capacity(knots.len());
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if clipped.is_empty() {
            clipped.push((x0, y0));
        }
        if x1 <= end {
            clipped.push((x1, y1));
        } else {
            if x0 < end {
                clipped.push((end, y0 + (y1 - y0) * (end - x0) / (x1 - x0)));
            }
            break;
        }
    }
    clipped
}

/// `int_{w0}^{w1} y(w) cos(n w) dw` for `y` linear from `y0` to `y1`.
fn segment_cosine_integral<T: Scalar>(n: usize, w0: T, w1: T, y0: T, y1: T) -> T {
    if n == 0 {
        return (y0 + y1) * (w1 - w0) / T::lit(2.0);
    }
    let nf = T::from_usize_exact(n);
    let slope = (y1 - y0) / (w1 - w0);
    let boundary = (y1 * (nf * w1).sin() - y0 * (nf * w0).sin()) / nf;
    boundary + slope * ((nf * w1).cos() - (nf * w0).cos()) / (nf * nf)
}

/// `int_0^pi cos(m w) cos(n w) dw` for integers `m, n`.
fn cosine_gram<T: Scalar>(m: usize, n: usize) -> T {
    let pi = T::PI();
    match (m, n) {
        (0, 0) => pi,
        (m, n) if m == n => pi / T::lit(2.0),
        _ => T::zero(),
    }
}

/// Reusable design state for one `(d, L)` pair.
///
/// The gram matrix does not depend on the stop bands, so it is factored once
/// and each [`BandstopDesigner::design`] call only assembles the right-hand
/// side and back-substitutes.
#[derive(Debug, Clone)]
pub struct BandstopDesigner<T> {
    series_len: usize,
    filter_len: usize,
    gram: Cholesky<T>,
    gram_inv_ones: Vec<T>,
    ones_gram_inv_ones: T,
}

impl<T: Scalar> BandstopDesigner<T> {
    pub fn new(series_len: usize, filter_len: usize) -> Result<Self, DspError> {
        if filter_len.is_multiple_of(2) || filter_len < 3 {
            return Err(DspError::InvalidFilterLength {
                length: filter_len,
                reason: "length must be odd and at least 3",
            });
        }
        if filter_len > series_len {
            return Err(DspError::FilterLongerThanSeries { filter: filter_len, series: series_len });
        }
        let unknowns = filter_len / 2 + 1;
        let mut q = SquareMatrix::zeros(unknowns);
        for m in 0..unknowns {
            for n in 0..unknowns {
                q.set(m, n, cosine_gram(m, n));
            }
        }
        let gram = Cholesky::factor(&q, T::epsilon().sqrt()).ok_or(DspError::SingularDesignSystem)?;
        let gram_inv_ones = gram.solve(&vec![T::one(); unknowns]);
        let ones_gram_inv_ones: T = gram_inv_ones.iter().copied().sum();
        if !(ones_gram_inv_ones > T::zero()) {
            return Err(DspError::SingularDesignSystem);
        }
        Ok(Self { series_len, filter_len, gram, gram_inv_ones, ones_gram_inv_ones })
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn filter_len(&self) -> usize {
        self.filter_len
    }

    /// Designs the bandstop for inclusive bin ranges `(low, high)`.
    pub fn design(&self, stop_bands: &[(usize, usize)]) -> Result<FirFilter<T>, DspError> {
        let bands = normalize_bands(stop_bands, self.series_len)?;
        let unknowns = self.filter_len / 2 + 1;
        let to_omega = T::TAU() / T::from_usize_exact(self.series_len);
        let knots = desired_knots::<T>(&bands, self.series_len);
        let mut rhs = vec![T::zero(); unknowns];
        for w in knots.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x1 <= x0 || (y0 == T::zero() && y1 == T::zero()) {
                continue;
            }
            for (n, r) in rhs.iter_mut().enumerate() {
                *r = *r + segment_cosine_integral(n, x0 * to_omega, x1 * to_omega, y0, y1);
            }
        }
        // Lagrange step for the DC constraint sum(a) = 1
        let free = self.gram.solve(&rhs);
        let lambda = (T::one() - free.iter().copied().sum::<T>()) / self.ones_gram_inv_ones;
        let cosines: Vec<T> = free.iter().zip(&self.gram_inv_ones).map(|(&a, &g)| a + lambda * g).collect();
        if cosines.iter().any(|c| !c.is_finite()) {
            return Err(DspError::SingularDesignSystem);
        }
        let m = unknowns - 1;
        let half = T::lit(0.5);
        let mut h = vec![T::zero(); self.filter_len];
        h[m] = cosines[0];
        for n in 1..=m {
            h[m - n] = cosines[n] * half;
            h[m + n] = cosines[n] * half;
        }
        FirFilter::new(h)
    }
}

/// Designs a least-squares bandstop of length `filter_len` for a length-`d` series.
pub fn design_firls_bandstop<T: Scalar>(
    stop_bands: &[(usize, usize)],
    d: usize,
    filter_len: usize,
) -> Result<FirFilter<T>, DspError> {
    BandstopDesigner::new(d, filter_len)?.design(stop_bands)
}
