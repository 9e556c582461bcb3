use super::{check_lengths, euclidean, inverse_distance_probabilities, Estimator, ModelError};
use crate::dsp::rdft;
use crate::{LabeledDataset, Scalar, TimeSeries};

/// Nearest-centroid classifier on RDFT magnitude spectra.
///
/// Only `|RDFT(x)|` enters the decision, so the model ignores circular time
/// shifts. It is deliberately blind to where in time a pattern occurs.
#[derive(Debug, Clone)]
pub struct SpectrumCentroidModel<T> {
    classes: Vec<String>,
    centroids: Vec<Vec<T>>,
    series_len: usize,
}

impl<T: Scalar> SpectrumCentroidModel<T> {
    pub fn new(train: &LabeledDataset<T>) -> Result<Self, ModelError> {
        if train.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        let labels = train.labels().ok_or(ModelError::MissingLabels)?;
        let classes = train.classes();
        let bins = train.series_len() / 2 + 1;
        let mut sums = vec![vec![T::zero(); bins]; classes.len()];
        let mut counts = vec![0usize; classes.len()];
        for (series, label) in train.series().iter().zip(labels) {
            let c = classes.binary_search(label).expect("label among classes");
            for (acc, m) in sums[c].iter_mut().zip(rdft(series).magnitudes()) {
                *acc = *acc + m;
            }
            counts[c] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(ModelError::EmptyClass(classes[c].clone()));
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / T::from_usize_exact(n)).collect())
            .collect();
        Ok(Self { classes, centroids, series_len: train.series_len() })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn centroids(&self) -> &[Vec<T>] {
        &self.centroids
    }
}

impl<T: Scalar> Estimator<T> for SpectrumCentroidModel<T> {
    fn output_names(&self) -> Vec<String> {
        self.classes.clone()
    }

    fn predict(&self, batch: &[TimeSeries<T>]) -> Result<Vec<Vec<T>>, ModelError> {
        check_lengths(batch, self.series_len)?;
        Ok(batch
            .iter()
            .map(|s| {
                let mag = rdft(s).magnitudes();
                let dists = self.centroids.iter().enumerate().map(|(c, centroid)| (c, euclidean(&mag, centroid)));
                inverse_distance_probabilities(dists, self.classes.len())
            })
            .collect())
    }
}
