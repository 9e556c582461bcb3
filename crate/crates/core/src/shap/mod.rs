//! Kernel-SHAP style estimation of impact vectors.
//!
//! The explanation model `g(z') = f(h_x(0)) + sum_k phi_k z'_k` is fitted by
//! weighted least squares over coalitions, with the all-ones coalition
//! entering as the hard constraint `sum(phi) = f(x) - f(h_x(0))`.

mod exact;
mod sampling;

use indexmap::IndexMap;
use thiserror::Error;

use crate::linalg::{Cholesky, SquareMatrix};
use crate::{CoreError, ImpactVector, Scalar, SimplifiedInput};

pub use exact::{exact_shapley, MAX_EXACT_FRAGMENTS};
pub use sampling::{sample_coalitions, shapley_kernel_weight, CoalitionPlan};

/// Ridge added to the diagonal of the normal equations.
pub const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapError {
    #[error("coalition of size {size} out of {fragments} has infinite kernel weight")]
    DegenerateCoalition { fragments: usize, size: usize },
    #[error("design matrix is rank deficient: {distinct} distinct coalitions for {fragments} fragments")]
    RankDeficient { fragments: usize, distinct: usize },
    #[error("exact enumeration supports at most {MAX_EXACT_FRAGMENTS} fragments, got {0}")]
    TooManyFragments(usize),
    #[error("invalid coalition sample: {0}")]
    InvalidSample(String),
    #[error("game table of length {0} is not 2^d' for some d' >= 1")]
    InvalidGame(usize),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Regression data: coalitions, their kernel weights and the model outputs.
#[derive(Debug, Clone)]
pub struct CoalitionSample<T> {
    coalitions: Vec<SimplifiedInput>,
    weights: Vec<T>,
    outputs: Vec<T>,
}

impl<T: Scalar> CoalitionSample<T> {
    pub fn new(coalitions: Vec<SimplifiedInput>, weights: Vec<T>, outputs: Vec<T>) -> Result<Self, ShapError> {
        if coalitions.len() != weights.len() || coalitions.len() != outputs.len() {
            return Err(ShapError::InvalidSample(format!(
                "{} coalitions, {} weights, {} outputs",
                coalitions.len(),
                weights.len(),
                outputs.len()
            )));
        }
        let fragments = coalitions.first().map_or(0, SimplifiedInput::len);
        for z in &coalitions {
            if z.len() != fragments {
                return Err(ShapError::InvalidSample("coalitions of different lengths".into()));
            }
            if z.all_active() || z.none_active() {
                return Err(ShapError::InvalidSample(format!("coalition {z} is a constraint, not a sample")));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > T::zero())) {
            return Err(ShapError::InvalidSample("weights must be finite and positive".into()));
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(ShapError::InvalidSample("model outputs must be finite".into()));
        }
        Ok(Self { coalitions, weights, outputs })
    }

    pub fn coalitions(&self) -> &[SimplifiedInput] {
        &self.coalitions
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    /// Merges repeated coalitions: weights add, outputs are weight-averaged.
    fn merged(&self) -> Vec<(&SimplifiedInput, T, T)> {
        let mut merged: IndexMap<&SimplifiedInput, (T, T)> = IndexMap::with_capacity(self.len());
        for ((z, &w), &y) in self.coalitions.iter().zip(&self.weights).zip(&self.outputs) {
            let entry = merged.entry(z).or_insert((T::zero(), T::zero()));
            entry.0 = entry.0 + w;
            entry.1 = entry.1 + w * y;
        }
        merged.into_iter().map(|(z, (w, wy))| (z, w, wy / w)).collect()
    }
}

/// Solves the constrained weighted least-squares problem for `phi`.
///
/// `fragments` is needed when the sample is empty (possible for `d' = 1`).
/// The last fragment is eliminated through the efficiency constraint and the
/// remaining `d' - 1` unknowns come from ridge-stabilized normal equations.
pub fn solve_explanation<T: Scalar>(
    sample: &CoalitionSample<T>,
    fragments: usize,
    prediction: T,
    base_value: T,
) -> Result<ImpactVector<T>, ShapError> {
    if fragments == 0 {
        return Err(ShapError::InvalidSample("zero fragments".into()));
    }
    if sample.coalitions.first().is_some_and(|z| z.len() != fragments) {
        return Err(ShapError::InvalidSample("coalition length differs from fragment count".into()));
    }
    let total = prediction - base_value;
    if fragments == 1 {
        return Ok(ImpactVector::new(vec![total], base_value, prediction)?);
    }
    let rows = sample.merged();
    let free = fragments - 1;
    let last = fragments - 1;
    // mean weight 1 keeps the ridge far below the data scale
    let weight_sum: T = rows.iter().map(|r| r.1).sum();
    let norm = if rows.is_empty() { T::one() } else { T::from_usize_exact(rows.len()) / weight_sum };

    let mut normal = SquareMatrix::zeros(free);
    let mut rhs = vec![T::zero(); free];
    let mut design_row = vec![T::zero(); free];
    for &(z, w, y) in &rows {
        let w = w * norm;
        let z_last = if z.is_active(last) { T::one() } else { T::zero() };
        for (k, cell) in design_row.iter_mut().enumerate() {
            let zk = if z.is_active(k) { T::one() } else { T::zero() };
            *cell = zk - z_last;
        }
        let target = y - base_value - total * z_last;
        for i in 0..free {
            if design_row[i] == T::zero() {
                continue;
            }
            rhs[i] = rhs[i] + w * design_row[i] * target;
            for j in 0..free {
                normal.add(i, j, w * design_row[i] * design_row[j]);
            }
        }
    }
    let rank_tol = T::epsilon().sqrt();
    if Cholesky::factor(&normal, rank_tol).is_none() {
        return Err(ShapError::RankDeficient { fragments, distinct: rows.len() });
    }
    let ridge = T::lit(RIDGE);
    for i in 0..free {
        normal.add(i, i, ridge);
    }
    let factor = Cholesky::factor(&normal, T::zero()).ok_or(ShapError::RankDeficient { fragments, distinct: rows.len() })?;
    let mut phi = factor.solve(&rhs);
    let rest: T = phi.iter().copied().sum();
    phi.push(total - rest);
    Ok(ImpactVector::new(phi, base_value, prediction)?)
}
