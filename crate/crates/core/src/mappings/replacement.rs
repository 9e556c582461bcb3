//! Replacement series built from a reference set.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::MappingError;
use crate::{LabeledDataset, Scalar, TimeSeries};

/// How disabled fragments are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReplacementKind {
    Zero,
    LocalMean,
    GlobalMean,
    LocalNoise,
    GlobalNoise,
    Sample,
}

impl ReplacementKind {
    pub const ALL: [ReplacementKind; 6] = [
        ReplacementKind::Zero,
        ReplacementKind::LocalMean,
        ReplacementKind::GlobalMean,
        ReplacementKind::LocalNoise,
        ReplacementKind::GlobalNoise,
        ReplacementKind::Sample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReplacementKind::Zero => "zero",
            ReplacementKind::LocalMean => "local_mean",
            ReplacementKind::GlobalMean => "global_mean",
            ReplacementKind::LocalNoise => "local_noise",
            ReplacementKind::GlobalNoise => "global_noise",
            ReplacementKind::Sample => "sample",
        }
    }

    /// True when each run draws its own series from the reference set.
    pub fn is_series_dependent(self) -> bool {
        self == ReplacementKind::Sample
    }

    fn needs_aligned_reference(self) -> bool {
        matches!(self, ReplacementKind::LocalMean | ReplacementKind::LocalNoise | ReplacementKind::Sample)
    }
}

impl fmt::Display for ReplacementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReplacementKind {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == normalized)
            .ok_or_else(|| MappingError::UnknownName(s.to_string()))
    }
}

/// A replacement kind bound to its reference set and seed.
#[derive(Debug, Clone, Copy)]
pub struct ReplacementStrategy<'a, T> {
    pub kind: ReplacementKind,
    pub reference: &'a LabeledDataset<T>,
    pub rng_seed: u64,
}

fn local_mean<T: Scalar>(reference: &LabeledDataset<T>, d: usize) -> Vec<T> {
    let n = T::from_usize_exact(reference.len());
    (0..d)
        .map(|t| reference.series().iter().map(|s| s.values()[t]).sum::<T>() / n)
        .collect()
}

fn global_mean<T: Scalar>(reference: &LabeledDataset<T>) -> T {
    let count = T::from_usize_exact(reference.len() * reference.series_len());
    reference.series().iter().flat_map(|s| s.values()).copied().sum::<T>() / count
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng, mean: T, std: T) -> T {
    let z: f64 = rng.sample(StandardNormal);
    mean + std * T::lit(z)
}

/// Materializes the replacement series `r` of length `d`.
///
/// Noise and sample kinds draw from a `ChaCha8` generator seeded with
/// `strategy.rng_seed`, so the same seed always yields the same series.
pub fn build_replacement<T: Scalar>(strategy: &ReplacementStrategy<'_, T>, d: usize) -> Result<TimeSeries<T>, MappingError> {
    let reference = strategy.reference;
    if strategy.kind.needs_aligned_reference() && reference.series_len() != d {
        return Err(MappingError::DimensionMismatch { expected: d, found: reference.series_len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(strategy.rng_seed);
    let values = match strategy.kind {
        ReplacementKind::Zero => vec![T::zero(); d],
        ReplacementKind::LocalMean => local_mean(reference, d),
        ReplacementKind::GlobalMean => vec![global_mean(reference); d],
        ReplacementKind::LocalNoise => {
            if reference.len() < 2 {
                return Err(MappingError::VarianceUndefined);
            }
            let means = local_mean(reference, d);
            let dof = T::from_usize_exact(reference.len() - 1);
            means
                .iter()
                .enumerate()
                .map(|(t, &mu)| {
                    let ss: T = reference.series().iter().map(|s| (s.values()[t] - mu).powi(2)).sum();
                    gaussian(&mut rng, mu, (ss / dof).sqrt())
                })
                .collect()
        }
        ReplacementKind::GlobalNoise => {
            let count = reference.len() * reference.series_len();
            if count < 2 {
                return Err(MappingError::VarianceUndefined);
            }
            let mu = global_mean(reference);
            let ss: T = reference.series().iter().flat_map(|s| s.values()).map(|&v| (v - mu).powi(2)).sum();
            let std = (ss / T::from_usize_exact(count - 1)).sqrt();
            (0..d).map(|_| gaussian(&mut rng, mu, std)).collect()
        }
        ReplacementKind::Sample => {
            let index = rng.random_range(0..reference.len());
            reference.series()[index].values().to_vec()
        }
    };
    Ok(TimeSeries::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate_dataset;

    fn reference() -> LabeledDataset<f64> {
        validate_dataset(vec![vec![1.0, 3.0], vec![5.0, 7.0]], None).unwrap()
    }

    fn build(kind: ReplacementKind, reference: &LabeledDataset<f64>, d: usize, seed: u64) -> Result<Vec<f64>, MappingError> {
        build_replacement(&ReplacementStrategy { kind, reference, rng_seed: seed }, d).map(|s| s.into_values())
    }

    #[test]
    fn deterministic_kinds() {
        let r = reference();
        assert_eq!(build(ReplacementKind::Zero, &r, 3, 0).unwrap(), vec![0.0; 3]);
        assert_eq!(build(ReplacementKind::LocalMean, &r, 2, 0).unwrap(), vec![3.0, 5.0]);
        assert_eq!(build(ReplacementKind::GlobalMean, &r, 2, 0).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn global_mean_ignores_reference_length() {
        let r = reference();
        assert_eq!(build(ReplacementKind::GlobalMean, &r, 4, 0).unwrap(), vec![4.0; 4]);
        assert!(matches!(
            build(ReplacementKind::LocalMean, &r, 4, 0),
            Err(MappingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_needs_two_samples() {
        let single = validate_dataset(vec![vec![1.0, 2.0]], None).unwrap();
        assert!(matches!(build(ReplacementKind::LocalNoise, &single, 2, 0), Err(MappingError::VarianceUndefined)));
        assert!(build(ReplacementKind::GlobalNoise, &single, 2, 0).is_ok());
    }

    #[test]
    fn noise_is_seeded() {
        let r = reference();
        let a = build(ReplacementKind::LocalNoise, &r, 2, 7).unwrap();
        assert_eq!(a, build(ReplacementKind::LocalNoise, &r, 2, 7).unwrap());
        assert_ne!(a, build(ReplacementKind::LocalNoise, &r, 2, 8).unwrap());
    }

    #[test]
    fn noise_moments_follow_reference() {
        // many samples of global noise should match the pooled mean and std
        let raw: Vec<Vec<f64>> = (0..40).map(|i| (0..50).map(|t| ((i * 31 + t * 17) % 13) as f64).collect()).collect();
        let r = validate_dataset(raw.clone(), None).unwrap();
        let all: Vec<f64> = raw.concat();
        let mu = all.iter().sum::<f64>() / all.len() as f64;
        let sd = (all.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (all.len() - 1) as f64).sqrt();
        let mut drawn = Vec::new();
        for seed in 0..200 {
            drawn.extend(build(ReplacementKind::GlobalNoise, &r, 50, seed).unwrap());
        }
        let m = drawn.iter().sum::<f64>() / drawn.len() as f64;
        let s = (drawn.iter().map(|v| (v - m).powi(2)).sum::<f64>() / drawn.len() as f64).sqrt();
        assert!((m - mu).abs() < 0.05 * sd);
        assert!((s - sd).abs() < 0.05 * sd);
    }

    #[test]
    fn sample_draws_a_reference_member() {
        let r = reference();
        for seed in 0..10 {
            let s = build(ReplacementKind::Sample, &r, 2, seed).unwrap();
            assert!(r.series().iter().any(|x| x.values() == s.as_slice()));
        }
    }

    #[test]
    fn names_round_trip() {
        for k in ReplacementKind::ALL {
            assert_eq!(k.as_str().parse::<ReplacementKind>().unwrap(), k);
        }
        assert_eq!("local-mean".parse::<ReplacementKind>().unwrap(), ReplacementKind::LocalMean);
        assert!("median".parse::<ReplacementKind>().is_err());
    }
}
