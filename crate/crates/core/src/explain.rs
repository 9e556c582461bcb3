//! End-to-end explanations: mapping construction, model probing, the SHAP
//! solve, multi-run averaging and environment classes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::mappings::{build_replacement, MappingError, MappingFunction, MappingKind, ReplacementKind, ReplacementStrategy};
use crate::models::{Estimator, ModelError};
use crate::shap::{sample_coalitions, solve_explanation, CoalitionSample, ShapError};
use crate::{ClassExplanation, CoreError, ImpactVector, LabeledDataset, Scalar, SimplifiedInput, TimeSeries};

pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_BUDGET: usize = 1000;
/// Upper bound of the automatic fragment count.
pub const MAX_AUTO_FRAGMENTS: usize = 30;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("reference set is empty")]
    EmptyReference,
    #[error("environment classes need a labeled reference set")]
    MissingLabels,
    #[error("class {0:?} has no series in the reference set")]
    EmptyClass(String),
    #[error("model returned {found} rows of {width} outputs for a batch of {expected}")]
    OutputShape { expected: usize, found: usize, width: usize },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Shap(#[from] ShapError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// How many fragments to split the specimen into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FragmentPolicy {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for FragmentPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(FragmentPolicy::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(FragmentPolicy::Fixed(n)),
            _ => Err(format!("expected \"auto\" or a positive integer, got {s:?}")),
        }
    }
}

impl fmt::Display for FragmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentPolicy::Auto => f.write_str("auto"),
            FragmentPolicy::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Automatic fragment count for a series of length `d`.
///
/// Time slices use `min(d/5, 30)` clamped to `1..=d`; frequency bands use
/// `min(d/10, 30)` clamped to `1..=d/2`; statistics always have two.
pub fn auto_fragments(kind: MappingKind, d: usize) -> usize {
    match kind {
        MappingKind::TimeSlice => (d / 5).min(MAX_AUTO_FRAGMENTS).clamp(1, d.max(1)),
        MappingKind::FreqFilter | MappingKind::FreqPatch => (d / 10).min(MAX_AUTO_FRAGMENTS).clamp(1, (d / 2).max(1)),
        MappingKind::Statistics => 2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    pub mapping: MappingKind,
    pub fragments: FragmentPolicy,
    pub replacement: ReplacementKind,
    pub runs: usize,
    pub budget: usize,
    pub seed: u64,
    pub environment_classes: bool,
    /// FIR length for the filter mapping; `None` picks the default.
    pub filter_len: Option<usize>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            mapping: MappingKind::TimeSlice,
            fragments: FragmentPolicy::Auto,
            replacement: ReplacementKind::Sample,
            runs: DEFAULT_RUNS,
            budget: DEFAULT_BUDGET,
            seed: 0,
            environment_classes: true,
            filter_len: None,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.runs < 1 {
            return Err(ExplainError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.budget < 2 {
            return Err(ExplainError::InvalidConfig("coalition budget must be at least 2".into()));
        }
        Ok(())
    }

    pub fn resolve_fragments(&self, d: usize) -> usize {
        match self.fragments {
            FragmentPolicy::Auto => auto_fragments(self.mapping, d),
            FragmentPolicy::Fixed(n) => n,
        }
    }

    /// True when each run draws its own series from the reference set.
    pub fn is_series_dependent(&self) -> bool {
        self.mapping.uses_replacement() && self.replacement.is_series_dependent()
    }
}

/// Bookkeeping of one explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunInfo {
    pub fragments: usize,
    /// Slice boundaries or band edges; empty for statistics.
    pub edges: Vec<usize>,
    /// Runs averaged per environment.
    pub runs: usize,
    pub environments: usize,
    pub model_queries: usize,
    pub exact_mode: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub explanation: ClassExplanation<T>,
    pub info: RunInfo,
}

struct Job<'a, T> {
    environment: usize,
    reference: &'a LabeledDataset<T>,
    draw: Option<usize>,
    coalition_seed: u64,
    noise_seed: u64,
}

struct JobResult<T> {
    environment: usize,
    per_output: Vec<ImpactVector<T>>,
    queries: usize,
    exact: bool,
    edges: Vec<usize>,
}

fn plan_jobs<'a, T: Scalar>(
    cfg: &ExplainConfig,
    environments: &'a [LabeledDataset<T>],
) -> Result<(Vec<Job<'a, T>>, usize), ExplainError> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs = Vec::new();
    let mut runs_used = 1;
    for (e, reference) in environments.iter().enumerate() {
        if reference.is_empty() {
            return Err(ExplainError::EmptyReference);
        }
        let draws: Vec<Option<usize>> = if cfg.is_series_dependent() {
            let n = cfg.runs.min(reference.len());
            if n < cfg.runs {
                log::warn!("only {} reference series available, averaging {n} runs instead of {}", reference.len(), cfg.runs);
            }
            runs_used = n;
            index::sample(&mut master, reference.len(), n).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        for draw in draws {
            let coalition_seed = master.next_u64();
            let noise_seed = master.next_u64();
            jobs.push(Job { environment: e, reference, draw, coalition_seed, noise_seed });
        }
    }
    Ok((jobs, runs_used))
}

fn run_job<T: Scalar, M: Estimator<T> + ?Sized>(
    model: &M,
    outputs: usize,
    x: &TimeSeries<T>,
    cfg: &ExplainConfig,
    fragments: usize,
    job: &Job<'_, T>,
) -> Result<JobResult<T>, ExplainError> {
    let replacement = if !cfg.mapping.uses_replacement() {
        None
    } else if let Some(i) = job.draw {
        let r = &job.reference.series()[i];
        if r.len() != x.len() {
            return Err(MappingError::DimensionMismatch { expected: x.len(), found: r.len() }.into());
        }
        Some(r.clone())
    } else {
        let strategy = ReplacementStrategy { kind: cfg.replacement, reference: job.reference, rng_seed: job.noise_seed };
        Some(build_replacement(&strategy, x.len())?)
    };
    let h = MappingFunction::build(cfg.mapping, x.clone(), fragments, replacement, cfg.filter_len)?;
    let plan = sample_coalitions(fragments, cfg.budget, job.coalition_seed);

    let mut batch = Vec::with_capacity(plan.len() + 2);
    batch.push(x.clone());
    batch.push(h.apply(&SimplifiedInput::zeros(fragments))?);
    for z in plan.coalitions() {
        batch.push(h.apply(z)?);
    }
    let rows = model.predict(&batch)?;
    if rows.len() != batch.len() || rows.iter().any(|r| r.len() != outputs) {
        let width = rows.iter().map(Vec::len).find(|&w| w != outputs).unwrap_or(outputs);
        return Err(ExplainError::OutputShape { expected: batch.len(), found: rows.len(), width });
    }

    let weights = plan.weights_as::<T>();
    let per_output = (0..outputs)
        .map(|o| {
            let ys = rows[2..].iter().map(|r| r[o]).collect();
            let sample = CoalitionSample::new(plan.coalitions().to_vec(), weights.clone(), ys)?;
            solve_explanation(&sample, fragments, rows[0][o], rows[1][o])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JobResult { environment: job.environment, per_output, queries: batch.len(), exact: plan.is_exact(), edges: h.edges() })
}

/// Runs every job and returns `phi` per environment and output, averaged
/// over runs, plus the run bookkeeping.
fn explain_environments<T: Scalar, M: Estimator<T> + ?Sized>(
    model: &M,
    x: &TimeSeries<T>,
    cfg: &ExplainConfig,
    environments: &[LabeledDataset<T>],
) -> Result<(Vec<Vec<ImpactVector<T>>>, RunInfo), ExplainError> {
    cfg.validate()?;
    let outputs = model.output_names().len();
    if outputs == 0 {
        return Err(ExplainError::InvalidConfig("model has no outputs".into()));
    }
    let fragments = cfg.resolve_fragments(x.len());
    let (jobs, runs) = plan_jobs(cfg, environments)?;
    let results: Vec<JobResult<T>> =
        jobs.par_iter().map(|job| run_job(model, outputs, x, cfg, fragments, job)).collect::<Result<_, _>>()?;

    let mut per_env = Vec::with_capacity(environments.len());
    for e in 0..environments.len() {
        let mine: Vec<&JobResult<T>> = results.iter().filter(|r| r.environment == e).collect();
        let averaged = (0..outputs)
            .map(|o| {
                let runs: Vec<ImpactVector<T>> = mine.iter().map(|r| r.per_output[o].clone()).collect();
                ImpactVector::mean_of(&runs)
            })
            .collect::<Result<Vec<_>, _>>()?;
        per_env.push(averaged);
    }
    let info = RunInfo {
        fragments,
        edges: results.first().map(|r| r.edges.clone()).unwrap_or_default(),
        runs,
        environments: environments.len(),
        model_queries: results.iter().map(|r| r.queries).sum(),
        exact_mode: results.iter().all(|r| r.exact),
    };
    Ok((per_env, info))
}

/// Explains every model output against the whole reference set.
///
/// Series-dependent replacements average `cfg.runs` runs over distinct
/// reference series (fewer if the set is smaller); other replacements use a
/// single run. The result is keyed by output name, without intermediates.
pub fn explain_single<T: Scalar, M: Estimator<T> + ?Sized>(
    model: &M,
    x: &TimeSeries<T>,
    cfg: &ExplainConfig,
    reference: &LabeledDataset<T>,
) -> Result<Outcome<T>, ExplainError> {
    let (mut per_env, info) = explain_environments(model, x, cfg, std::slice::from_ref(reference))?;
    let per_class = model.output_names().into_iter().zip(per_env.remove(0)).collect();
    Ok(Outcome { explanation: ClassExplanation::new(per_class, None)?, info })
}

/// Explains a probabilistic classifier with environment classes.
///
/// For every class `c'` the reference subset `S^{c'}` supplies replacements,
/// and one probing pass yields `phi^{c,c'}` for all classes `c` at once. The
/// final `phi^c` is the mean over `c'`. With `cfg.environment_classes` off
/// this is [`explain_single`].
pub fn explain_classifier<T: Scalar, M: Estimator<T> + ?Sized>(
    model: &M,
    x: &TimeSeries<T>,
    cfg: &ExplainConfig,
    reference: &LabeledDataset<T>,
) -> Result<Outcome<T>, ExplainError> {
    if !cfg.environment_classes {
        return explain_single(model, x, cfg, reference);
    }
    if !reference.is_labeled() {
        return Err(ExplainError::MissingLabels);
    }
    let classes = model.output_names();
    let environments = classes
        .iter()
        .map(|c| reference.class_subset(c).ok_or_else(|| ExplainError::EmptyClass(c.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let (per_env, info) = explain_environments(model, x, cfg, &environments)?;

    let mut intermediates = BTreeMap::new();
    let mut per_class = BTreeMap::new();
    for (o, class) in classes.iter().enumerate() {
        let parts: Vec<ImpactVector<T>> = per_env.iter().map(|env| env[o].clone()).collect();
        per_class.insert(class.clone(), ImpactVector::mean_of(&parts)?);
        for (env_class, v) in classes.iter().zip(parts) {
            intermediates.insert((class.clone(), env_class.clone()), v);
        }
    }
    Ok(Outcome { explanation: ClassExplanation::new(per_class, Some(intermediates))?, info })
}
