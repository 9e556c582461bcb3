use super::{check_lengths, euclidean, inverse_distance_probabilities, Estimator, ModelError};
use crate::{LabeledDataset, Scalar, TimeSeries};

/// k-nearest-neighbor classifier on whole-series Euclidean distance with
/// inverse-distance weighted votes.
#[derive(Debug, Clone)]
pub struct KnnModel<T> {
    train: LabeledDataset<T>,
    classes: Vec<String>,
    class_of: Vec<usize>,
    k: usize,
}

impl<T: Scalar> KnnModel<T> {
    pub fn new(train: LabeledDataset<T>, k: usize) -> Result<Self, ModelError> {
        if train.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        let labels = train.labels().ok_or(ModelError::MissingLabels)?;
        if k < 1 || k > train.len() {
            return Err(ModelError::InvalidNeighborCount { k, available: train.len() });
        }
        let classes = train.classes();
        let class_of = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label among classes"))
            .collect();
        Ok(Self { train, classes, class_of, k })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn predict_one(&self, x: &[T]) -> Vec<T> {
        let mut dist: Vec<(T, usize)> =
            self.train.series().iter().enumerate().map(|(i, s)| (euclidean(x, s.values()), i)).collect();
        // stable sort keeps training order among equal distances
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
        inverse_distance_probabilities(dist[..self.k].iter().map(|&(d, i)| (self.class_of[i], d)), self.classes.len())
    }
}

impl<T: Scalar> Estimator<T> for KnnModel<T> {
    fn output_names(&self) -> Vec<String> {
        self.classes.clone()
    }

    fn predict(&self, batch: &[TimeSeries<T>]) -> Result<Vec<Vec<T>>, ModelError> {
        check_lengths(batch, self.train.series_len())?;
        Ok(batch.iter().map(|s| self.predict_one(s.values())).collect())
    }
}
