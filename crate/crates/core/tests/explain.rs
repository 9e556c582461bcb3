use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use timexplain::explain::{explain_classifier, explain_single, ExplainConfig, FragmentPolicy};
use timexplain::mappings::{MappingKind, ReplacementKind};
use timexplain::models::{Estimator, FnModel, KnnModel, SpectrumCentroidModel};
use timexplain::series::ADDITIVITY_TOLERANCE;
use timexplain::{Dataset, Impact, LabeledDataset, Series, TimeSeries};

const D: usize = 60;
const BUMP: std::ops::Range<usize> = 35..40;

/// Two classes that differ only by a bump over `BUMP`, which is slice 7 of
/// the auto time slicing for d = 60.
fn bump_dataset(n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let values = (0..D)
            .map(|t| {
                let noise: f64 = rng.sample(StandardNormal);
                0.1 * noise + if class == 1 && BUMP.contains(&t) { 2.0 } else { 0.0 }
            })
            .collect();
        rows.push(Series::new(values).unwrap());
        labels.push(class.to_string());
    }
    Dataset::new(rows, Some(labels)).unwrap()
}

fn check_additivity(v: &Impact) {
    let gap = v.phi().iter().sum::<f64>() - (v.prediction() - v.base_value());
    assert!(gap.abs() <= ADDITIVITY_TOLERANCE, "gap {gap}");
}

fn argmax_abs(phi: &[f64]) -> usize {
    (0..phi.len()).max_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs())).unwrap()
}

#[test]
fn knn_explanations_point_at_the_discriminative_slice() {
    let mut hits = 0;
    let trials = 20;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let train = bump_dataset(20, &mut rng);
        let test = bump_dataset(2, &mut rng);
        let model = KnnModel::new(train.clone(), 5).unwrap();
        let cfg = ExplainConfig { seed: trial, ..Default::default() };
        let x = &test.series()[1];
        let out = explain_classifier(&model, x, &cfg, &train).unwrap();
        let phi = out.explanation.get("1").unwrap().phi();
        if argmax_abs(phi) == 7 {
            hits += 1;
        }
    }
    assert!(hits >= trials * 9 / 10, "{hits}/{trials}");
}

#[test]
fn shift_invariant_model_still_gets_time_domain_impacts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let train = bump_dataset(20, &mut rng);
    let model = SpectrumCentroidModel::new(&train).unwrap();
    let x = &train.series()[1];
    let out = explain_classifier(&model, x, &ExplainConfig::default(), &train).unwrap();
    for v in out.explanation.per_class().values() {
        check_additivity(v);
        assert!(v.phi().iter().map(|p| p.abs()).sum::<f64>() > 0.0);
    }
}

#[test]
fn exact_mode_query_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let train = bump_dataset(12, &mut rng);
    let model = KnnModel::new(train.clone(), 3).unwrap();
    let cfg = ExplainConfig { fragments: FragmentPolicy::Fixed(3), budget: 100, ..Default::default() };
    let out = explain_classifier(&model, &train.series()[0], &cfg, &train).unwrap();
    assert!(out.info.exact_mode);
    // 2 environments x 6 runs (one per class member) x (6 coalitions + x + h(0))
    assert_eq!(out.info.runs, 6);
    assert_eq!(out.info.model_queries, 2 * 6 * 8);
    let inter = out.explanation.intermediates().unwrap();
    assert_eq!(inter.len(), 4);
    for c in ["0", "1"] {
        let envs: Vec<&Impact> = ["0", "1"].iter().map(|e| &inter[&(c.to_string(), e.to_string())]).collect();
        let mean: Vec<f64> = (0..3).map(|k| (envs[0].phi()[k] + envs[1].phi()[k]) / 2.0).collect();
        for (a, b) in out.explanation.get(c).unwrap().phi().iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn f32_and_f64_agree_on_a_linear_model() {
    let weights: Vec<f64> = (0..D).map(|t| (t as f64 * 0.37).sin()).collect();
    let w32: Vec<f32> = weights.iter().map(|&w| w as f32).collect();
    let m64 = FnModel::new("y", |v: &[f64]| v.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>());
    let m32 = FnModel::new("y", |v: &[f32]| v.iter().zip(&w32).map(|(a, b)| a * b).sum::<f32>());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let train = bump_dataset(8, &mut rng);
    let train32 = LabeledDataset::new(
        train.series().iter().map(|s| TimeSeries::new(s.values().iter().map(|&v| v as f32).collect()).unwrap()).collect(),
        train.labels().map(<[String]>::to_vec),
    )
    .unwrap();
    let cfg = ExplainConfig { replacement: ReplacementKind::GlobalMean, ..Default::default() };
    let a = explain_single(&m64, &train.series()[1], &cfg, &train).unwrap();
    let b = explain_single(&m32, &train32.series()[1], &cfg, &train32).unwrap();
    for (x, y) in a.explanation.get("y").unwrap().phi().iter().zip(b.explanation.get("y").unwrap().phi()) {
        assert!((x - *y as f64).abs() < 1e-3, "{x} vs {y}");
    }
}

#[test]
fn same_seed_same_explanation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train = bump_dataset(16, &mut rng);
    let model = KnnModel::new(train.clone(), 5).unwrap();
    let cfg = ExplainConfig { seed: 77, ..Default::default() };
    let a = explain_classifier(&model, &train.series()[3], &cfg, &train).unwrap();
    let b = explain_classifier(&model, &train.series()[3], &cfg, &train).unwrap();
    assert_eq!(a.explanation, b.explanation);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_impact_vector_is_additive(
        seed in any::<u64>(),
        kind in prop::sample::select(vec![MappingKind::TimeSlice, MappingKind::FreqPatch, MappingKind::FreqFilter, MappingKind::Statistics]),
        replacement in prop::sample::select(vec![
            ReplacementKind::Zero, ReplacementKind::LocalMean, ReplacementKind::GlobalMean,
            ReplacementKind::LocalNoise, ReplacementKind::GlobalNoise, ReplacementKind::Sample,
        ]),
        env in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = bump_dataset(10, &mut rng);
        let model = KnnModel::new(train.clone(), 3).unwrap();
        let cfg = ExplainConfig { mapping: kind, replacement, seed, environment_classes: env, runs: 3, budget: 200, ..Default::default() };
        let x = &train.series()[(seed % 10) as usize];
        let out = explain_classifier(&model, x, &cfg, &train).unwrap();
        let probs = model.predict(std::slice::from_ref(x)).unwrap();
        for (c, v) in out.explanation.per_class() {
            check_additivity(v);
            let idx = model.output_names().iter().position(|n| n == c).unwrap();
            prop_assert!((v.prediction() - probs[0][idx]).abs() < 1e-12);
        }
        for v in out.explanation.intermediates().into_iter().flat_map(|m| m.values()) {
            check_additivity(v);
        }
    }
}
