use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ShapError;
use crate::{Scalar, SimplifiedInput};

/// Binomial coefficient as a float, `None` once it overflows.
fn binomial(n: usize, k: usize) -> Option<f64> {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.is_finite().then_some(acc)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Shapley kernel `(d' - 1) / (binom(d', s) s (d' - s))`.
pub fn shapley_kernel_weight<T: Scalar>(fragments: usize, size: usize) -> Result<T, ShapError> {
    if size == 0 || size >= fragments {
        return Err(ShapError::DegenerateCoalition { fragments, size });
    }
    let numerator = (fragments - 1) as f64 / (size as f64 * (fragments - size) as f64);
    let weight = match binomial(fragments, size) {
        Some(b) => numerator / b,
        None => (numerator.ln() - ln_binomial(fragments, size)).exp(),
    };
    Ok(T::lit(weight))
}

/// The coalitions to query for one explanation, with their regression weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPlan {
    coalitions: Vec<SimplifiedInput>,
    weights: Vec<f64>,
    exact: bool,
}

impl CoalitionPlan {
    pub fn coalitions(&self) -> &[SimplifiedInput] {
        &self.coalitions
    }

    /// Kernel weights in exact mode; draw multiplicities in sampled mode.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_as<T: Scalar>(&self) -> Vec<T> {
        self.weights.iter().map(|&w| T::lit(w)).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }
}

fn exact_mode(fragments: usize, budget: usize) -> bool {
    fragments < 64 && (1u64 << fragments) - 2 <= budget as u64
}

/// Chooses the coalitions for one explanation.
///
/// When all `2^d' - 2` proper coalitions fit in the budget they are
/// enumerated and weighted by the kernel. Otherwise coalition sizes are drawn
/// with probability proportional to `binom(d', s) pi(s)`, members uniformly
/// within a size, and every draw is paired with its complement. Drawing stops
/// once the budget (rounded down to even) of distinct coalitions is reached;
/// repeated draws raise a coalition's weight instead of adding rows.
pub fn sample_coalitions(fragments: usize, budget: usize, rng_seed: u64) -> CoalitionPlan {
    assert!(fragments >= 1, "fragment count must be positive");
    if exact_mode(fragments, budget) {
        let count = (1u64 << fragments) - 1;
        let coalitions: Vec<SimplifiedInput> = (1..count).map(|m| SimplifiedInput::from_mask(m, fragments)).collect();
        let weights = coalitions
            .iter()
            .map(|z| shapley_kernel_weight::<f64>(fragments, z.count_active()).expect("proper coalition"))
            .collect();
        return CoalitionPlan { coalitions, weights, exact: true };
    }

    let target = (budget.max(2) / 2) * 2;
    let sizes: Vec<usize> = (1..fragments).collect();
    let size_weights: Vec<f64> = sizes.iter().map(|&s| 1.0 / (s as f64 * (fragments - s) as f64)).collect();
    let size_dist = WeightedIndex::new(&size_weights).expect("positive size weights");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts: IndexMap<SimplifiedInput, usize> = IndexMap::with_capacity(target);
    while counts.len() < target {
        let size = sizes[size_dist.sample(&mut rng)];
        let mut bits = vec![false; fragments];
        for k in index::sample(&mut rng, fragments, size) {
            bits[k] = true;
        }
        let z = SimplifiedInput::new(bits).expect("non-empty");
        let complement = z.complement();
        *counts.entry(z).or_insert(0) += 1;
        *counts.entry(complement).or_insert(0) += 1;
    }
    let (coalitions, weights) = counts.into_iter().map(|(z, c)| (z, c as f64)).unzip();
    CoalitionPlan { coalitions, weights, exact: false }
}
