//! Real-input DFT and its inverse.
//!
//! Prime lengths use the direct O(d^2) sum; composite lengths go through a
//! mixed-radix Cooley-Tukey recursion that splits off the smallest prime
//! factor at each level.

use num_complex::Complex;

use super::DspError;
use crate::{Scalar, TimeSeries};

/// Non-negative frequency half `0..=d/2` of a real series' DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    bins: Vec<Complex<T>>,
    original_length: usize,
}

impl<T: Scalar> Spectrum<T> {
    pub fn new(bins: Vec<Complex<T>>, original_length: usize) -> Result<Self, DspError> {
        if original_length < 2 || bins.len() != original_length / 2 + 1 {
            return Err(DspError::InvalidSpectrum(format!(
                "{} bins cannot describe a series of length {original_length}",
                bins.len()
            )));
        }
        if bins[0].im != T::zero() {
            return Err(DspError::InvalidSpectrum("DC bin has a nonzero imaginary part".into()));
        }
        if original_length.is_multiple_of(2) && bins[original_length / 2].im != T::zero() {
            return Err(DspError::InvalidSpectrum("Nyquist bin has a nonzero imaginary part".into()));
        }
        Ok(Self { bins, original_length })
    }

    pub fn bins(&self) -> &[Complex<T>] {
        &self.bins
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.bins.iter().map(|c| c.norm()).collect()
    }
}

fn twiddle<T: Scalar>(index: usize, n: usize, sign: T) -> Complex<T> {
    let angle = sign * T::TAU() * T::from_usize_exact(index % n) / T::from_usize_exact(n);
    Complex::new(angle.cos(), angle.sin())
}

fn smallest_factor(n: usize) -> Option<usize> {
    (2..).take_while(|p| p * p <= n).find(|p| n.is_multiple_of(*p))
}

fn dft_direct<T: Scalar>(input: &[Complex<T>], sign: T) -> Vec<Complex<T>> {
    let n = input.len();
    let table: Vec<Complex<T>> = (0..n).map(|k| twiddle(k, n, sign)).collect();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (t, &v)| acc + v * table[(k * t) % n])
        })
        .collect()
}

/// Complex DFT with kernel `exp(sign * 2 pi i k t / n)`.
fn dft<T: Scalar>(input: &[Complex<T>], sign: T) -> Vec<Complex<T>> {
    let n = input.len();
    let Some(p) = smallest_factor(n) else {
        return dft_direct(input, sign);
    };
    let m = n / p;
    let subs: Vec<Vec<Complex<T>>> = (0..p)
        .map(|j| {
            let part: Vec<_> = (0..m).map(|q| input[j + p * q]).collect();
            dft(&part, sign)
        })
        .collect();
    let table: Vec<Complex<T>> = (0..n).map(|k| twiddle(k, n, sign)).collect();
    (0..n)
        .map(|k| {
            subs.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (j, sub)| {
                acc + sub[k % m] * table[(j * k) % n]
            })
        })
        .collect()
}

/// Real DFT: `bins[w] = sum_t x_t exp(-2 pi i w t / d)` for `w` in `0..=d/2`.
pub fn rdft<T: Scalar>(x: &TimeSeries<T>) -> Spectrum<T> {
    rdft_values(x.values())
}

pub(crate) fn rdft_values<T: Scalar>(values: &[T]) -> Spectrum<T> {
    let d = values.len();
    let input: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut bins = dft(&input, -T::one());
    bins.truncate(d / 2 + 1);
    bins[0].im = T::zero();
    if d.is_multiple_of(2) {
        bins[d / 2].im = T::zero();
    }
    Spectrum { bins, original_length: d }
}

/// Inverse of [`rdft`]; rebuilds the Hermitian spectrum and keeps the real part.
pub fn irdft<T: Scalar>(spectrum: &Spectrum<T>) -> Result<TimeSeries<T>, DspError> {
    Ok(TimeSeries::new(irdft_values(spectrum))?)
}

pub(crate) fn irdft_values<T: Scalar>(spectrum: &Spectrum<T>) -> Vec<T> {
    let d = spectrum.original_length;
    let half = &spectrum.bins;
    let full: Vec<Complex<T>> = (0..d)
        .map(|k| if k < half.len() { half[k] } else { half[d - k].conj() })
        .collect();
    let scale = T::from_usize_exact(d);
    dft(&full, T::one()).into_iter().map(|c| c.re / scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn assert_bins(spec: &Spectrum<f64>, expected: &[(f64, f64)]) {
        assert_eq!(spec.bins().len(), expected.len());
        for (b, &(re, im)) in spec.bins().iter().zip(expected) {
            assert!((b.re - re).abs() < 1e-12 && (b.im - im).abs() < 1e-12, "{b} vs {re}+{im}i");
        }
    }

    #[test]
    fn constant_series_has_only_dc() {
        assert_bins(&rdft(&series(&[1.0, 1.0, 1.0, 1.0])), &[(4.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
    }

    #[test]
    fn alternating_series_is_nyquist() {
        assert_bins(&rdft(&series(&[1.0, -1.0, 1.0, -1.0])), &[(0.0, 0.0), (0.0, 0.0), (4.0, 0.0)]);
    }

    #[test]
    fn zero_series_odd_length() {
        assert_bins(&rdft(&series(&[0.0; 5])), &[(0.0, 0.0); 3]);
    }

    #[test]
    fn inverse_examples() {
        let c = |re: f64| Complex::new(re, 0.0);
        let s = Spectrum::new(vec![c(4.0), c(0.0), c(0.0)], 4).unwrap();
        assert_eq!(irdft(&s).unwrap().values(), &[1.0, 1.0, 1.0, 1.0]);
        let s = Spectrum::new(vec![c(8.0), c(0.0), c(4.0)], 4).unwrap();
        let x = irdft(&s).unwrap();
        for (a, b) in x.values().iter().zip([3.0, 1.0, 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_rejects_complex_dc_and_nyquist() {
        let bins = vec![Complex::new(1.0, 0.5), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)];
        assert!(Spectrum::new(bins, 4).is_err());
        let bins = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.1)];
        assert!(Spectrum::new(bins.clone(), 4).is_err());
        // odd length: the last bin is not a Nyquist bin
        assert!(Spectrum::new(bins, 5).is_ok());
        assert!(Spectrum::<f64>::new(vec![Complex::new(0.0, 0.0)], 4).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x = TimeSeries::new(vec![0.5f32, -1.0, 2.0, 0.25, 3.0, 1.0]).unwrap();
        let y = irdft(&rdft(&x)).unwrap();
        for (a, b) in x.values().iter().zip(y.values()) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
