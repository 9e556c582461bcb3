//! Mapping functions `h_x` that turn a simplified input into a perturbed
//! specimen, for the time, frequency and statistics domains.

mod assignment;
mod replacement;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use thiserror::Error;

use crate::dsp::{self, BandstopDesigner, DspError, Spectrum};
use crate::{CoreError, Scalar, SimplifiedInput, TimeSeries};

pub use assignment::{make_band_assignment, make_slice_assignment, BandAssignment, SliceAssignment};
pub use replacement::{build_replacement, ReplacementKind, ReplacementStrategy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("fragment count {fragments} out of range 1..={max}")]
    FragmentCountOutOfRange { fragments: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("variance undefined: reference set too small for a noise replacement")]
    VarianceUndefined,
    #[error("specimen has zero standard deviation; cannot replace it")]
    ZeroVariance,
    #[error("mapping is of kind {actual}, not {expected}")]
    KindMismatch { expected: MappingKind, actual: MappingKind },
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// The domain in which fragments are defined and disabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MappingKind {
    TimeSlice,
    FreqFilter,
    FreqPatch,
    Statistics,
}

impl MappingKind {
    pub const ALL: [MappingKind; 4] =
        [MappingKind::TimeSlice, MappingKind::FreqFilter, MappingKind::FreqPatch, MappingKind::Statistics];

    pub fn as_str(self) -> &'static str {
        match self {
            MappingKind::TimeSlice => "time_slice",
            MappingKind::FreqFilter => "freq_filter",
            MappingKind::FreqPatch => "freq_patch",
            MappingKind::Statistics => "statistics",
        }
    }

    pub fn is_frequency(self) -> bool {
        matches!(self, MappingKind::FreqFilter | MappingKind::FreqPatch)
    }

    /// Whether the mapping consumes a replacement or patch series.
    pub fn uses_replacement(self) -> bool {
        self != MappingKind::FreqFilter
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingKind {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| MappingError::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone)]
enum Content<T> {
    Slices { assignment: SliceAssignment, replacement: TimeSeries<T> },
    Patch { assignment: BandAssignment, specimen: Spectrum<T>, patch: Spectrum<T>, series: TimeSeries<T> },
    Filter { assignment: BandAssignment, designer: BandstopDesigner<T> },
    Statistics { mean: T, std: T },
}

/// A mapping function `h_x` bound to one specimen.
///
/// Construction materializes everything random (replacement or patch series),
/// so evaluation is deterministic and can run concurrently.
#[derive(Debug, Clone)]
pub struct MappingFunction<T> {
    specimen: TimeSeries<T>,
    content: Content<T>,
}

impl<T: Scalar> MappingFunction<T> {
    /// Time slice mapping with replacement series `replacement`.
    pub fn time_slice(specimen: TimeSeries<T>, fragments: usize, replacement: TimeSeries<T>) -> Result<Self, MappingError> {
        check_len(&specimen, &replacement)?;
        let assignment = make_slice_assignment(specimen.len(), fragments)?;
        Ok(Self { specimen, content: Content::Slices { assignment, replacement } })
    }

    /// Frequency band mapping that patches disabled bands from `patch`.
    pub fn freq_patch(specimen: TimeSeries<T>, fragments: usize, patch: TimeSeries<T>) -> Result<Self, MappingError> {
        check_len(&specimen, &patch)?;
        let assignment = make_band_assignment(specimen.len(), fragments)?;
        Ok(Self {
            content: Content::Patch {
                assignment,
                specimen: dsp::rdft(&specimen),
                patch: dsp::rdft(&patch),
                series: patch,
            },
            specimen,
        })
    }

    /// Frequency band mapping that cuts disabled bands with a FIRLS bandstop.
    ///
    /// `filter_len` defaults to [`dsp::default_filter_length`].
    pub fn freq_filter(specimen: TimeSeries<T>, fragments: usize, filter_len: Option<usize>) -> Result<Self, MappingError> {
        let d = specimen.len();
        let assignment = make_band_assignment(d, fragments)?;
        let designer = BandstopDesigner::new(d, filter_len.unwrap_or_else(|| dsp::default_filter_length(d)))?;
        Ok(Self { specimen, content: Content::Filter { assignment, designer } })
    }

    /// Statistics mapping with replacement mean and standard deviation.
    pub fn statistics(specimen: TimeSeries<T>, mean: T, std: T) -> Result<Self, MappingError> {
        if !mean.is_finite() || !std.is_finite() || std < T::zero() {
            return Err(CoreError::NonFiniteValue { series: 0, index: 0 }.into());
        }
        Ok(Self { specimen, content: Content::Statistics { mean, std } })
    }

    /// Statistics mapping taking the population mean and std of `replacement`.
    pub fn statistics_from(specimen: TimeSeries<T>, replacement: &TimeSeries<T>) -> Result<Self, MappingError> {
        Self::statistics(specimen, replacement.mean(), replacement.population_std())
    }

    /// Builds any kind; `replacement` is ignored by the filter mapping and
    /// required by the others.
    pub fn build(
        kind: MappingKind,
        specimen: TimeSeries<T>,
        fragments: usize,
        replacement: Option<TimeSeries<T>>,
        filter_len: Option<usize>,
    ) -> Result<Self, MappingError> {
        let take = |r: Option<TimeSeries<T>>| {
            r.ok_or(MappingError::DimensionMismatch { expected: specimen.len(), found: 0 })
        };
        match kind {
            MappingKind::TimeSlice => {
                let r = take(replacement)?;
                Self::time_slice(specimen, fragments, r)
            }
            MappingKind::FreqPatch => {
                let r = take(replacement)?;
                Self::freq_patch(specimen, fragments, r)
            }
            MappingKind::FreqFilter => Self::freq_filter(specimen, fragments, filter_len),
            MappingKind::Statistics => {
                if fragments != 2 {
                    return Err(MappingError::FragmentCountOutOfRange { fragments, max: 2 });
                }
                let r = take(replacement)?;
                Self::statistics_from(specimen, &r)
            }
        }
    }

    pub fn kind(&self) -> MappingKind {
        match self.content {
            Content::Slices { .. } => MappingKind::TimeSlice,
            Content::Patch { .. } => MappingKind::FreqPatch,
            Content::Filter { .. } => MappingKind::FreqFilter,
            Content::Statistics { .. } => MappingKind::Statistics,
        }
    }

    pub fn specimen(&self) -> &TimeSeries<T> {
        &self.specimen
    }

    pub fn fragments(&self) -> usize {
        match &self.content {
            Content::Slices { assignment, .. } => assignment.fragments(),
            Content::Patch { assignment, .. } | Content::Filter { assignment, .. } => assignment.fragments(),
            Content::Statistics { .. } => 2,
        }
    }

    /// Replacement or patch series, when the kind uses one.
    pub fn replacement(&self) -> Option<&TimeSeries<T>> {
        match &self.content {
            Content::Slices { replacement, .. } => Some(replacement),
            Content::Patch { series, .. } => Some(series),
            _ => None,
        }
    }

    /// Replacement `(mean, std)` of a statistics mapping.
    pub fn replacement_statistics(&self) -> Option<(T, T)> {
        match self.content {
            Content::Statistics { mean, std } => Some((mean, std)),
            _ => None,
        }
    }

    pub fn slice_assignment(&self) -> Option<&SliceAssignment> {
        match &self.content {
            Content::Slices { assignment, .. } => Some(assignment),
            _ => None,
        }
    }

    pub fn band_assignment(&self) -> Option<&BandAssignment> {
        match &self.content {
            Content::Patch { assignment, .. } | Content::Filter { assignment, .. } => Some(assignment),
            _ => None,
        }
    }

    /// Fragment boundaries: slice boundaries in samples or band edges in bins.
    pub fn edges(&self) -> Vec<usize> {
        match &self.content {
            Content::Slices { assignment, .. } => assignment.boundaries().to_vec(),
            Content::Patch { assignment, .. } | Content::Filter { assignment, .. } => assignment.edges().to_vec(),
            Content::Statistics { .. } => Vec::new(),
        }
    }

    /// Evaluates `h_x(z')`.
    pub fn apply(&self, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
        if z.len() != self.fragments() {
            return Err(MappingError::DimensionMismatch { expected: self.fragments(), found: z.len() });
        }
        if z.all_active() {
            return Ok(self.specimen.clone());
        }
        let x = self.specimen.values();
        let values = match &self.content {
            Content::Slices { assignment, replacement } => x
                .iter()
                .zip(replacement.values())
                .enumerate()
                .map(|(t, (&xv, &rv))| if z.is_active(assignment.slice_of(t)) { xv } else { rv })
                .collect(),
            Content::Patch { assignment, specimen, patch, .. } => {
                let bins: Vec<Complex<T>> = specimen
                    .bins()
                    .iter()
                    .zip(patch.bins())
                    .enumerate()
                    .map(|(w, (&xb, &rb))| match assignment.band_of(w) {
                        Some(k) if !z.is_active(k) => rb,
                        _ => xb,
                    })
                    .collect();
                dsp::irdft_values(&Spectrum::new(bins, x.len())?)
            }
            Content::Filter { assignment, designer } => {
                let stop: Vec<(usize, usize)> =
                    (0..assignment.fragments()).filter(|&k| !z.is_active(k)).map(|k| assignment.bins(k)).collect();
                let filter = designer.design(&stop)?;
                dsp::apply_zero_phase_values(&filter, x)?
            }
            Content::Statistics { mean, std } => {
                let mu_x = self.specimen.mean();
                let target_mean = if z.is_active(0) { mu_x } else { *mean };
                if z.is_active(1) {
                    x.iter().map(|&v| v - mu_x + target_mean).collect()
                } else {
                    let sigma_x = self.specimen.population_std();
                    if sigma_x == T::zero() {
                        return Err(MappingError::ZeroVariance);
                    }
                    let ratio = *std / sigma_x;
                    x.iter().map(|&v| (v - mu_x) * ratio + target_mean).collect()
                }
            }
        };
        Ok(TimeSeries::new(values)?)
    }
}

fn check_len<T: Scalar>(specimen: &TimeSeries<T>, other: &TimeSeries<T>) -> Result<(), MappingError> {
    if specimen.len() != other.len() {
        return Err(MappingError::DimensionMismatch { expected: specimen.len(), found: other.len() });
    }
    Ok(())
}

fn apply_kind<T: Scalar>(h: &MappingFunction<T>, kind: MappingKind, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
    if h.kind() != kind {
        return Err(MappingError::KindMismatch { expected: kind, actual: h.kind() });
    }
    h.apply(z)
}

/// `x_t` where slice `kappa(t)` is active, `r_t` elsewhere.
pub fn time_slice_map<T: Scalar>(h: &MappingFunction<T>, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
    apply_kind(h, MappingKind::TimeSlice, z)
}

/// Inverse DFT of the specimen's spectrum with disabled bands taken from the patch.
pub fn freq_patch_map<T: Scalar>(h: &MappingFunction<T>, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
    apply_kind(h, MappingKind::FreqPatch, z)
}

/// Specimen passed through a bandstop covering every disabled band.
pub fn freq_filter_map<T: Scalar>(h: &MappingFunction<T>, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
    apply_kind(h, MappingKind::FreqFilter, z)
}

/// Specimen re-normalized to the replacement mean and/or standard deviation.
pub fn statistics_map<T: Scalar>(h: &MappingFunction<T>, z: &SimplifiedInput) -> Result<TimeSeries<T>, MappingError> {
    apply_kind(h, MappingKind::Statistics, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn z(bits: &str) -> SimplifiedInput {
        SimplifiedInput::parse(bits).unwrap()
    }

    fn sinusoid(d: usize, bin: usize, phase: f64) -> TimeSeries<f64> {
        let w = std::f64::consts::TAU * bin as f64 / d as f64;
        ts(&(0..d).map(|t| (w * t as f64 + phase).sin()).collect::<Vec<_>>())
    }

    fn rms(v: &[f64]) -> f64 {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn time_slice_examples() {
        let h = MappingFunction::time_slice(ts(&[1.0, 2.0, 3.0, 4.0]), 2, ts(&[0.0; 4])).unwrap();
        assert_eq!(time_slice_map(&h, &z("11")).unwrap().values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(time_slice_map(&h, &z("00")).unwrap().values(), &[0.0; 4]);
        assert_eq!(time_slice_map(&h, &z("01")).unwrap().values(), &[0.0, 0.0, 3.0, 4.0]);
        assert!(matches!(time_slice_map(&h, &z("011")), Err(MappingError::DimensionMismatch { .. })));
        assert!(matches!(freq_patch_map(&h, &z("01")), Err(MappingError::KindMismatch { .. })));
    }

    #[test]
    fn patch_examples() {
        let h = MappingFunction::freq_patch(ts(&[2.0; 4]), 1, ts(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        let out = freq_patch_map(&h, &z("0")).unwrap();
        for (a, b) in out.values().iter().zip([3.0, 1.0, 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(freq_patch_map(&h, &z("1")).unwrap().values(), &[2.0; 4]);
    }

    #[test]
    fn patching_with_itself_is_identity() {
        let x = ts(&[0.4, -1.0, 2.5, 0.0, 3.3, -0.7, 1.1]);
        let h = MappingFunction::freq_patch(x.clone(), 3, x.clone()).unwrap();
        for mask in 0..8u64 {
            let out = h.apply(&SimplifiedInput::from_mask(mask, 3)).unwrap();
            for (a, b) in out.values().iter().zip(x.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn filter_bypass_and_attenuation() {
        let d = 256;
        let x = sinusoid(d, 0, 0.0).map_values(|v| v + 1.0).unwrap();
        let h = MappingFunction::freq_filter(x.clone(), 6, None).unwrap();
        assert_eq!(freq_filter_map(&h, &SimplifiedInput::ones(6)).unwrap(), x);

        let bands = make_band_assignment(d, 6).unwrap();
        for k in 1..5 {
            let (lo, hi) = bands.bins(k);
            let x = sinusoid(d, (lo + hi) / 2, 0.4);
            let h = MappingFunction::freq_filter(x.clone(), 6, None).unwrap();
            let mut bits = vec![true; 6];
            bits[k] = false;
            let off = h.apply(&SimplifiedInput::new(bits).unwrap()).unwrap();
            assert!(rms(off.values()) <= 0.05 * rms(x.values()), "band {k} disabled");
            let mut bits = vec![true; 6];
            bits[k - 1] = false;
            bits[k + 1] = false;
            let on = h.apply(&SimplifiedInput::new(bits).unwrap()).unwrap();
            assert!(rms(on.values()) >= 0.7 * rms(x.values()), "band {k} enabled");
        }
    }

    #[test]
    fn statistics_examples() {
        let h = MappingFunction::statistics(ts(&[0.0, 1.0, 2.0, 3.0]), 0.0, 5.0).unwrap();
        assert_eq!(statistics_map(&h, &z("11")).unwrap().values(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(statistics_map(&h, &z("01")).unwrap().values(), &[-1.5, -0.5, 0.5, 1.5]);

        let x = ts(&[0.0, 2.0]);
        let sigma = x.population_std();
        let h = MappingFunction::statistics(x, 123.0, 2.0 * sigma).unwrap();
        assert_eq!(statistics_map(&h, &z("10")).unwrap().values(), &[-1.0, 3.0]);
    }

    #[test]
    fn statistics_zero_variance() {
        let h = MappingFunction::statistics(ts(&[1.0, 1.0, 1.0]), 0.0, 1.0).unwrap();
        assert!(matches!(h.apply(&z("10")), Err(MappingError::ZeroVariance)));
        assert!(h.apply(&z("01")).is_ok());
    }

    #[test]
    fn statistics_full_replacement_moments() {
        let x = ts(&[0.3, 2.0, -1.0, 4.0, 0.5]);
        let h = MappingFunction::statistics(x, -2.0, 0.75).unwrap();
        let out = h.apply(&z("00")).unwrap();
        assert!((out.mean() + 2.0).abs() < 1e-10);
        assert!((out.population_std() - 0.75).abs() < 1e-10);
    }

    #[test]
    fn build_rejects_wrong_statistics_fragments() {
        let x = ts(&[0.3, 2.0, -1.0]);
        let r = Some(ts(&[0.0; 3]));
        assert!(MappingFunction::build(MappingKind::Statistics, x.clone(), 3, r.clone(), None).is_err());
        assert!(MappingFunction::build(MappingKind::Statistics, x, 2, r, None).is_ok());
    }

    #[test]
    fn kind_names() {
        for k in MappingKind::ALL {
            assert_eq!(k.as_str().parse::<MappingKind>().unwrap(), k);
        }
        assert_eq!("time-slice".parse::<MappingKind>().unwrap(), MappingKind::TimeSlice);
    }
}
