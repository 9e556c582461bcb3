//! Domain types shared across the crate.
//!
//! Every type validates its structural invariants on construction and is
//! immutable afterwards, so values can be shared freely between workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::Scalar;

/// Shortest series the toolkit accepts; means and deviations need two samples.
pub const MIN_SERIES_LEN: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("series must have at least {MIN_SERIES_LEN} values, got {0}")]
    SeriesTooShort(usize),
    #[error("non-finite value in series {series} at index {index}")]
    NonFiniteValue { series: usize, index: usize },
    #[error("series {series} has length {found}, expected {expected}")]
    NonUniformLength { series: usize, expected: usize, found: usize },
    #[error("{labels} labels given for {series} series")]
    LabelCountMismatch { series: usize, labels: usize },
    #[error("dataset contains no series")]
    EmptyDataset,
    #[error("simplified input must have at least one fragment")]
    EmptySimplifiedInput,
    #[error("invalid simplified input character {0:?}; expected '0' or '1'")]
    InvalidBit(char),
    #[error("impact vector entry {0} is not finite")]
    NonFiniteImpact(usize),
    #[error("impact vector violates additivity: sum(phi) - (prediction - base) = {gap:e}")]
    AdditivityViolated { gap: f64 },
    #[error("class {class:?}: final vector differs from the mean of its intermediates by {gap:e}")]
    EnvironmentMeanMismatch { class: String, gap: f64 },
    #[error("impact vectors have mismatched fragment counts {0} and {1}")]
    FragmentCountMismatch(usize, usize),
}

/// A fixed-length real-valued series of finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self, CoreError> {
        if values.len() < MIN_SERIES_LEN {
            return Err(CoreError::SeriesTooShort(values.len()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteValue { series: 0, index });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_exact(self.len())
    }

    /// Standard deviation with divisor `d`.
    pub fn population_std(&self) -> T {
        let mean = self.mean();
        let ss: T = self.values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / T::from_usize_exact(self.len())).sqrt()
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Result<Self, CoreError> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Binary vector selecting which fragments are active.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplifiedInput {
    bits: Vec<bool>,
}

impl SimplifiedInput {
    pub fn new(bits: Vec<bool>) -> Result<Self, CoreError> {
        if bits.is_empty() {
            return Err(CoreError::EmptySimplifiedInput);
        }
        Ok(Self { bits })
    }

    pub fn ones(fragments: usize) -> Self {
        assert!(fragments > 0, "fragment count must be positive");
        Self { bits: vec![true; fragments] }
    }

    pub fn zeros(fragments: usize) -> Self {
        assert!(fragments > 0, "fragment count must be positive");
        Self { bits: vec![false; fragments] }
    }

    /// Builds the input whose bit `k` is bit `k` of `mask`.
    pub fn from_mask(mask: u64, fragments: usize) -> Self {
        assert!((1..=64).contains(&fragments));
        Self { bits: (0..fragments).map(|k| mask >> k & 1 == 1).collect() }
    }

    /// Parses a string such as `"0110"`; character `k` is fragment `k`.
    pub fn parse(text: &str) -> Result<Self, CoreError> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CoreError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_active(&self, fragment: usize) -> bool {
        self.bits[fragment]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_active(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn all_active(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn none_active(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }
}

impl fmt::Debug for SimplifiedInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimplifiedInput(")?;
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for SimplifiedInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Reference set of equal-length series with optional class labels.
///
/// Class identifiers are opaque strings; [`LabeledDataset::classes`] returns
/// them in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    series: Vec<TimeSeries<T>>,
    labels: Option<Vec<String>>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(series: Vec<TimeSeries<T>>, labels: Option<Vec<String>>) -> Result<Self, CoreError> {
        let first = series.first().ok_or(CoreError::EmptyDataset)?;
        let expected = first.len();
        for (i, s) in series.iter().enumerate() {
            if s.len() != expected {
                return Err(CoreError::NonUniformLength { series: i, expected, found: s.len() });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != series.len() {
                return Err(CoreError::LabelCountMismatch { series: series.len(), labels: labels.len() });
            }
        }
        Ok(Self { series, labels })
    }

    pub fn series(&self) -> &[TimeSeries<T>] {
        &self.series
    }

    pub fn get(&self, index: usize) -> Option<&TimeSeries<T>> {
        self.series.get(index)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.as_ref().and_then(|l| l.get(index)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Common series length `d`.
    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn classes(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.labels.iter().flatten().collect();
        set.into_iter().cloned().collect()
    }

    /// The subset `S^c`, or `None` when unlabeled or when no series has class `c`.
    pub fn class_subset(&self, class: &str) -> Option<Self> {
        let labels = self.labels.as_ref()?;
        let (series, labels): (Vec<_>, Vec<_>) = self
            .series
            .iter()
            .zip(labels)
            .filter(|(_, l)| l.as_str() == class)
            .map(|(s, l)| (s.clone(), l.clone()))
            .unzip();
        if series.is_empty() {
            None
        } else {
            Some(Self { series, labels: Some(labels) })
        }
    }
}

/// Builds a [`LabeledDataset`] from raw vectors, reporting the first defect.
pub fn validate_dataset<T: Scalar>(
    raw_series: Vec<Vec<T>>,
    raw_labels: Option<Vec<String>>,
) -> Result<LabeledDataset<T>, CoreError> {
    let expected = raw_series.first().ok_or(CoreError::EmptyDataset)?.len();
    let mut series = Vec::with_capacity(raw_series.len());
    for (i, values) in raw_series.into_iter().enumerate() {
        if values.len() != expected {
            return Err(CoreError::NonUniformLength { series: i, expected, found: values.len() });
        }
        let s = TimeSeries::new(values).map_err(|e| match e {
            CoreError::NonFiniteValue { index, .. } => CoreError::NonFiniteValue { series: i, index },
            other => other,
        })?;
        series.push(s);
    }
    LabeledDataset::new(series, raw_labels)
}

/// Impact values `phi` of one explanation plus its anchors `f(h_x(0))` and `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactVector<T> {
    phi: Vec<T>,
    base_value: T,
    prediction: T,
}

/// Additivity tolerance at `f64` precision.
pub const ADDITIVITY_TOLERANCE: f64 = 1e-8;

impl<T: Scalar> ImpactVector<T> {
    pub fn new(phi: Vec<T>, base_value: T, prediction: T) -> Result<Self, CoreError> {
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteImpact(i));
        }
        if !base_value.is_finite() || !prediction.is_finite() {
            return Err(CoreError::NonFiniteImpact(phi.len()));
        }
        let v = Self { phi, base_value, prediction };
        let scale = v.phi.iter().map(|p| p.abs()).sum::<T>() + base_value.abs() + prediction.abs();
        let gap = v.additivity_gap();
        if gap.abs() > T::tolerance(ADDITIVITY_TOLERANCE, scale) {
            return Err(CoreError::AdditivityViolated { gap: gap.to_f64_lossy() });
        }
        Ok(v)
    }

    pub fn phi(&self) -> &[T] {
        &self.phi
    }

    pub fn base_value(&self) -> T {
        self.base_value
    }

    pub fn prediction(&self) -> T {
        self.prediction
    }

    pub fn fragment_count(&self) -> usize {
        self.phi.len()
    }

    /// `sum(phi) - (prediction - base_value)`.
    pub fn additivity_gap(&self) -> T {
        self.phi.iter().copied().sum::<T>() - (self.prediction - self.base_value)
    }

    /// Entrywise mean of equally sized vectors, anchors included.
    pub fn mean_of(vectors: &[Self]) -> Result<Self, CoreError> {
        let first = vectors.first().expect("mean of at least one vector");
        let n = T::from_usize_exact(vectors.len());
        let mut phi = vec![T::zero(); first.phi.len()];
        let mut base = T::zero();
        let mut pred = T::zero();
        for v in vectors {
            if v.phi.len() != phi.len() {
                return Err(CoreError::FragmentCountMismatch(phi.len(), v.phi.len()));
            }
            for (acc, &p) in phi.iter_mut().zip(&v.phi) {
                *acc = *acc + p;
            }
            base = base + v.base_value;
            pred = pred + v.prediction;
        }
        Self::new(phi.into_iter().map(|p| p / n).collect(), base / n, pred / n)
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self, CoreError> {
        Self::new(
            self.phi.iter().map(|&p| p * factor).collect(),
            self.base_value * factor,
            self.prediction * factor,
        )
    }
}

/// Per-class explanation `phi^c`, optionally with the intermediates `phi^{c,c'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExplanation<T> {
    per_class: BTreeMap<String, ImpactVector<T>>,
    intermediates: Option<BTreeMap<(String, String), ImpactVector<T>>>,
}

impl<T: Scalar> ClassExplanation<T> {
    pub fn new(
        per_class: BTreeMap<String, ImpactVector<T>>,
        intermediates: Option<BTreeMap<(String, String), ImpactVector<T>>>,
    ) -> Result<Self, CoreError> {
        if let Some(inter) = &intermediates {
            for (class, final_vec) in &per_class {
                let parts: Vec<_> = inter
                    .iter()
                    .filter(|((c, _), _)| c == class)
                    .map(|(_, v)| v.clone())
                    .collect();
                if parts.is_empty() {
                    continue;
                }
                let mean = ImpactVector::mean_of(&parts)?;
                let gap = mean
                    .phi()
                    .iter()
                    .zip(final_vec.phi())
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max);
                let scale = final_vec.phi().iter().fold(T::zero(), |m, p| m.max(p.abs()));
                if gap > T::tolerance(1e-12, scale) {
                    return Err(CoreError::EnvironmentMeanMismatch {
                        class: class.clone(),
                        gap: gap.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self { per_class, intermediates })
    }

    pub fn per_class(&self) -> &BTreeMap<String, ImpactVector<T>> {
        &self.per_class
    }

    pub fn get(&self, class: &str) -> Option<&ImpactVector<T>> {
        self.per_class.get(class)
    }

    /// Intermediate vectors keyed by `(class, environment class)`.
    pub fn intermediates(&self) -> Option<&BTreeMap<(String, String), ImpactVector<T>>> {
        self.intermediates.as_ref()
    }

    pub fn without_intermediates(mut self) -> Self {
        self.intermediates = None;
        self
    }
}
