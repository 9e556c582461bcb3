//! Estimators to explain: built-in toy classifiers and a client for
//! external models speaking a line-delimited JSON protocol.

mod centroid;
mod external;
mod knn;
pub mod protocol;

use std::time::Duration;

use thiserror::Error;

use crate::{Scalar, TimeSeries};

pub use centroid::SpectrumCentroidModel;
pub use external::{ExternalModel, DEFAULT_TIMEOUT};
pub use knn::KnnModel;

/// Inverse-distance weights are `1 / (distance + DISTANCE_EPSILON)`.
pub const DISTANCE_EPSILON: f64 = 1e-9;

/// Tolerance on probability rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set has no labels")]
    MissingLabels,
    #[error("class {0:?} has no training series")]
    EmptyClass(String),
    #[error("neighbor count {k} must be in 1..={available}")]
    InvalidNeighborCount { k: usize, available: usize },
    #[error("series of length {found} given to a model expecting length {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model returned {found} rows of {width} outputs for a batch of {expected}")]
    OutputShape { expected: usize, found: usize, width: usize },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("no response from model within {0:?}")]
    Timeout(Duration),
    #[error("model process exited: {0}")]
    ProcessExit(String),
    #[error("model i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

/// A pure function from series to a fixed list of named outputs.
///
/// Probabilistic classifiers name their outputs after the classes and return
/// rows that sum to one. Implementations must be callable from several
/// threads at once.
pub trait Estimator<T: Scalar>: Sync {
    fn output_names(&self) -> Vec<String>;

    /// One row of outputs per input series, in order.
    fn predict(&self, batch: &[TimeSeries<T>]) -> Result<Vec<Vec<T>>, ModelError>;
}

impl<T: Scalar, E: Estimator<T> + ?Sized> Estimator<T> for &E {
    fn output_names(&self) -> Vec<String> {
        (**self).output_names()
    }

    fn predict(&self, batch: &[TimeSeries<T>]) -> Result<Vec<Vec<T>>, ModelError> {
        (**self).predict(batch)
    }
}

/// Wraps a scalar function of the series values as a one-output estimator.
pub struct FnModel<F> {
    name: String,
    f: F,
}

impl<F> FnModel<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T + Sync> Estimator<T> for FnModel<F> {
    fn output_names(&self) -> Vec<String> {
        vec![self.name.clone()]
    }

    fn predict(&self, batch: &[TimeSeries<T>]) -> Result<Vec<Vec<T>>, ModelError> {
        Ok(batch.iter().map(|s| vec![(self.f)(s.values())]).collect())
    }
}

/// Checks that `rows` are probability vectors over `classes` outputs.
pub fn validate_probability_rows<T: Scalar>(rows: &[Vec<T>], batch: usize, classes: usize) -> Result<(), ModelError> {
    if rows.len() != batch {
        return Err(ModelError::ProtocolViolation(format!("{} rows for a batch of {batch}", rows.len())));
    }
    let tol = T::lit(ROW_SUM_TOLERANCE);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != classes {
            return Err(ModelError::ProtocolViolation(format!("row {i} has {} entries, expected {classes}", row.len())));
        }
        if row.iter().any(|p| !p.is_finite() || *p < -tol || *p > T::one() + tol) {
            return Err(ModelError::ProtocolViolation(format!("row {i} has entries outside [0, 1]")));
        }
        let sum: T = row.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(ModelError::ProtocolViolation(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Normalized inverse-distance weights, accumulated per class index.
fn inverse_distance_probabilities<T: Scalar>(neighbors: impl Iterator<Item = (usize, T)>, classes: usize) -> Vec<T> {
    let eps = T::lit(DISTANCE_EPSILON);
    let mut probs = vec![T::zero(); classes];
    for (class, dist) in neighbors {
        probs[class] = probs[class] + T::one() / (dist + eps);
    }
    let total: T = probs.iter().copied().sum();
    probs.iter_mut().for_each(|p| *p = *p / total);
    probs
}

fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

fn check_lengths<T: Scalar>(batch: &[TimeSeries<T>], expected: usize) -> Result<(), ModelError> {
    match batch.iter().find(|s| s.len() != expected) {
        Some(s) => Err(ModelError::DimensionMismatch { expected, found: s.len() }),
        None => Ok(()),
    }
}
