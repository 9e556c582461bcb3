//! Similarity of explanations: Pearson correlation of impact vectors and
//! median-correlation matrices across models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::mappings::MappingKind;
use crate::{ImpactVector, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("impact vectors have {left} and {right} fragments")]
    FragmentCountMismatch { left: usize, right: usize },
    #[error("correlation needs at least 2 fragments, got {0}")]
    TooFewFragments(usize),
    #[error("correlation undefined: an impact vector is constant")]
    ZeroVariancePair,
    #[error("no defined correlation to take the median of")]
    AllUndefined,
    #[error("incompatible explanations: {0}")]
    IncompatibleExplanations(String),
}

/// Domain an explanation's fragments live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Time,
    Frequency,
    Statistics,
}

impl From<MappingKind> for Domain {
    fn from(kind: MappingKind) -> Self {
        match kind {
            MappingKind::TimeSlice => Domain::Time,
            MappingKind::FreqFilter | MappingKind::FreqPatch => Domain::Frequency,
            MappingKind::Statistics => Domain::Statistics,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
            Domain::Statistics => "statistics",
        })
    }
}

/// The pairs `(phi_k, psi_k)` of two explanations of one specimen.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPointSet<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> CorrelationPointSet<T> {
    pub fn new(phi: &[T], psi: &[T]) -> Result<Self, SimilarityError> {
        if phi.len() != psi.len() {
            return Err(SimilarityError::FragmentCountMismatch { left: phi.len(), right: psi.len() });
        }
        Ok(Self { points: phi.iter().copied().zip(psi.iter().copied()).collect() })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Pearson coefficient of the points.
    pub fn pearson(&self) -> Result<T, SimilarityError> {
        let n = self.points.len();
        if n < 2 {
            return Err(SimilarityError::TooFewFragments(n));
        }
        let count = T::from_usize_exact(n);
        let mean_a = self.points.iter().map(|p| p.0).sum::<T>() / count;
        let mean_b = self.points.iter().map(|p| p.1).sum::<T>() / count;
        let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
        for &(a, b) in &self.points {
            let (da, db) = (a - mean_a, b - mean_b);
            sab = sab + da * db;
            saa = saa + da * da;
            sbb = sbb + db * db;
        }
        if saa == T::zero() || sbb == T::zero() {
            return Err(SimilarityError::ZeroVariancePair);
        }
        // sqrt of a product keeps r(x, x) == 1 exactly
        let r = sab / (saa * sbb).sqrt();
        Ok(r.max(-T::one()).min(T::one()))
    }
}

pub fn pearson_similarity<T: Scalar>(phi: &ImpactVector<T>, psi: &ImpactVector<T>) -> Result<T, SimilarityError> {
    CorrelationPointSet::new(phi.phi(), psi.phi())?.pearson()
}

/// Median of the defined coefficients; an even count takes the midpoint.
pub fn median_similarity<T: Scalar>(coefficients: &[Option<T>]) -> Result<T, SimilarityError> {
    let mut defined: Vec<T> = coefficients.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(SimilarityError::AllUndefined);
    }
    defined.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
    let mid = defined.len() / 2;
    Ok(if defined.len() % 2 == 1 { defined[mid] } else { (defined[mid - 1] + defined[mid]) / T::lit(2.0) })
}

/// Median Pearson coefficients between models; `None` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    models: Vec<String>,
    entries: Vec<Option<T>>,
    domain: Domain,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.entries[row * self.models.len() + col]
    }

    /// CSV with a header row and column of model identifiers; undefined
    /// entries are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model");
        for m in &self.models {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (i, m) in self.models.iter().enumerate() {
            out.push_str(m);
            for j in 0..self.models.len() {
                match self.get(i, j) {
                    Some(v) => write!(out, ",{v}").expect("write to string"),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the median-correlation matrix from explanations keyed by
/// `(model, specimen)`.
///
/// Every model must have explained every specimen, and all explanations of a
/// specimen must share the fragment count.
pub fn build_matrix<T: Scalar>(
    explanations: &BTreeMap<(String, String), ImpactVector<T>>,
    domain: Domain,
) -> Result<SimilarityMatrix<T>, SimilarityError> {
    let models: Vec<String> = explanations.keys().map(|k| k.0.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let specimens: BTreeSet<&String> = explanations.keys().map(|k| &k.1).collect();
    if models.is_empty() {
        return Err(SimilarityError::IncompatibleExplanations("no explanations".into()));
    }
    let mut table: Vec<Vec<&ImpactVector<T>>> = Vec::with_capacity(models.len());
    for m in &models {
        let mut row = Vec::with_capacity(specimens.len());
        for &s in &specimens {
            let v = explanations.get(&(m.clone(), s.clone())).ok_or_else(|| {
                SimilarityError::IncompatibleExplanations(format!("model {m} has no explanation of specimen {s}"))
            })?;
            row.push(v);
        }
        table.push(row);
    }
    for (j, s) in specimens.iter().enumerate() {
        let d = table[0][j].fragment_count();
        if let Some(i) = (1..models.len()).find(|&i| table[i][j].fragment_count() != d) {
            return Err(SimilarityError::IncompatibleExplanations(format!(
                "specimen {s}: model {} has {} fragments, model {} has {d}",
                models[i],
                table[i][j].fragment_count(),
                models[0]
            )));
        }
    }
    let m = models.len();
    let mut entries = vec![None; m * m];
    for a in 0..m {
        for b in a..m {
            let coefficients: Vec<Option<T>> = (0..specimens.len())
                .map(|j| match pearson_similarity(table[a][j], table[b][j]) {
                    Ok(r) => Ok(Some(r)),
                    Err(SimilarityError::ZeroVariancePair) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_, _>>()?;
            let median = median_similarity(&coefficients).ok();
            entries[a * m + b] = median;
            entries[b * m + a] = median;
        }
    }
    Ok(SimilarityMatrix { models, entries, domain })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(phi: &[f64]) -> ImpactVector<f64> {
        ImpactVector::new(phi.to_vec(), 0.0, phi.iter().sum()).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let a = iv(&[1.0, 2.0, 3.0]);
        assert_eq!(pearson_similarity(&a, &a).unwrap(), 1.0);
        assert_eq!(pearson_similarity(&a, &iv(&[-1.0, -2.0, -3.0])).unwrap(), -1.0);
        // r = 5 / sqrt(2 * 114 / 9) by hand
        let r = pearson_similarity(&a, &iv(&[2.0, 4.0, 7.0])).unwrap();
        assert!((r - 5.0 / (228.0f64 / 9.0).sqrt()).abs() < 1e-12);
        assert!((r - 0.99340).abs() < 1e-5);
        // r = 6 / sqrt(2 * 56 / 3)
        let r = pearson_similarity(&a, &iv(&[2.0, 4.0, 8.0])).unwrap();
        assert!((r - 0.9819).abs() < 1e-4);
    }

    #[test]
    fn pearson_undefined_cases() {
        let a = iv(&[1.0, 2.0, 3.0]);
        assert_eq!(pearson_similarity(&a, &iv(&[2.0, 2.0, 2.0])), Err(SimilarityError::ZeroVariancePair));
        assert!(matches!(pearson_similarity(&a, &iv(&[1.0, 2.0])), Err(SimilarityError::FragmentCountMismatch { .. })));
        assert_eq!(pearson_similarity(&iv(&[1.0]), &iv(&[2.0])), Err(SimilarityError::TooFewFragments(1)));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_similarity(&[Some(0.2), Some(0.5), Some(0.9)]).unwrap(), 0.5);
        assert!((median_similarity(&[Some(0.2f64), Some(0.4)]).unwrap() - 0.3).abs() < 1e-15);
        assert!((median_similarity(&[Some(0.7f64), None, Some(0.9)]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(median_similarity::<f64>(&[None, None]), Err(SimilarityError::AllUndefined));
    }

    #[test]
    fn single_model_matrix() {
        let mut map = BTreeMap::new();
        map.insert(("m".to_string(), "s1".to_string()), iv(&[1.0, 0.0, 2.0]));
        map.insert(("m".to_string(), "s2".to_string()), iv(&[0.3, 0.1, -2.0]));
        let m = build_matrix(&map, Domain::Time).unwrap();
        assert_eq!(m.get(0, 0), Some(1.0));
        assert_eq!(m.to_csv(), "model,m\nm,1\n");
    }

    #[test]
    fn negated_models_and_missing_entries() {
        let mut map = BTreeMap::new();
        map.insert(("a".to_string(), "s".to_string()), iv(&[1.0, 0.0, 2.0]));
        map.insert(("b".to_string(), "s".to_string()), iv(&[-1.0, 0.0, -2.0]));
        map.insert(("c".to_string(), "s".to_string()), iv(&[0.5, 0.5, 0.5]));
        let m = build_matrix(&map, Domain::Frequency).unwrap();
        assert_eq!(m.get(0, 1), Some(-1.0));
        assert_eq!(m.get(2, 2), None);
        assert_eq!(m.get(0, 2), None);
        assert!(m.to_csv().contains("c,NA,NA,NA"));

        map.insert(("a".to_string(), "t".to_string()), iv(&[1.0, 0.0]));
        assert!(matches!(build_matrix(&map, Domain::Time), Err(SimilarityError::IncompatibleExplanations(_))));
    }

    #[test]
    fn mismatched_fragment_counts_are_refused() {
        let mut map = BTreeMap::new();
        map.insert(("a".to_string(), "s".to_string()), iv(&[1.0, 0.0, 2.0]));
        map.insert(("b".to_string(), "s".to_string()), iv(&[1.0, 0.0]));
        assert!(matches!(build_matrix(&map, Domain::Time), Err(SimilarityError::IncompatibleExplanations(_))));
    }
}
