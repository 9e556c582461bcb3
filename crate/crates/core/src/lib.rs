//! Model-agnostic, perturbation-based explanations for time series estimators.
//!
//! A specimen is split into fragments (time slices, frequency bands, or its
//! mean and standard deviation). Fragments are disabled through a mapping
//! function, the estimator is probed on the perturbed series, and a
//! constrained weighted least-squares fit yields one impact value per
//! fragment. Explanations of different models can be compared through
//! Pearson correlation of their impact vectors.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root name the `f64` instantiations used by the I/O
//! layer and the command-line tool.

pub mod dsp;
pub mod explain;
pub mod io;
pub mod linalg;
pub mod mappings;
pub mod models;
pub mod series;
pub mod shap;
pub mod similarity;

mod scalar;

pub use scalar::Scalar;
pub use series::{
    validate_dataset, ClassExplanation, CoreError, ImpactVector, LabeledDataset, SimplifiedInput,
    TimeSeries,
};

pub type Series = TimeSeries<f64>;
pub type Dataset = LabeledDataset<f64>;
pub type Impact = ImpactVector<f64>;
pub type Explanation = ClassExplanation<f64>;
pub type Spectrum = dsp::Spectrum<f64>;
pub type FirFilter = dsp::FirFilter<f64>;
pub type Mapping = mappings::MappingFunction<f64>;
pub type Matrix = similarity::SimilarityMatrix<f64>;
