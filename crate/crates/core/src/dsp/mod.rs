//! Real DFT, least-squares FIR bandstop design and zero-phase filtering.

mod filter;
mod firls;
mod fourier;

use thiserror::Error;

use crate::CoreError;

pub use filter::apply_zero_phase;
pub(crate) use filter::apply_zero_phase_values;
pub use firls::{default_filter_length, design_firls_bandstop, BandstopDesigner, FirFilter};
pub use fourier::{irdft, rdft, Spectrum};
pub(crate) use fourier::irdft_values;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("stop bands {first:?} and {second:?} overlap or are out of order")]
    OverlappingBands { first: (usize, usize), second: (usize, usize) },
    #[error("stop band [{low}, {high}] outside bins [1, {max_bin}]")]
    BandOutOfRange { low: usize, high: usize, max_bin: usize },
    #[error("filter design system is singular for this band layout")]
    SingularDesignSystem,
    #[error("invalid filter length {length}: {reason}")]
    InvalidFilterLength { length: usize, reason: &'static str },
    #[error("filter of length {filter} is longer than the series of length {series}")]
    FilterLongerThanSeries { filter: usize, series: usize },
    #[error("filter coefficients are not symmetric about the centre tap")]
    AsymmetricFilter,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}
