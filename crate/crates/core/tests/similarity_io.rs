use std::collections::BTreeMap;

use proptest::prelude::*;
use timexplain::io::{
    format_ucr, parse_ucr, plot_csv, ClassImpact, ExplanationDocument, MappingDescriptor, RunMetadata, SCHEMA_VERSION,
};
use timexplain::similarity::{build_matrix, pearson_similarity, Domain};
use timexplain::{Dataset, Impact, Series};

fn impact(phi: Vec<f64>) -> Impact {
    let total = phi.iter().sum::<f64>();
    Impact::new(phi, 0.0, total).unwrap()
}

/// Textbook two-pass Pearson coefficient.
fn two_pass_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn varied(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len).prop_filter("needs spread", |v| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().any(|x| (x - m).abs() > 1e-3)
    })
}

#[test]
fn hand_computed_coefficients() {
    let r = pearson_similarity(&impact(vec![1.0, 2.0, 3.0]), &impact(vec![2.0, 4.0, 7.0])).unwrap();
    // deviations (-1,0,1) and (-7,-1,8)/3: r = 5 / sqrt(2 * 114/9) = 15 / sqrt(228)
    assert!((r - 15.0 / 228f64.sqrt()).abs() < 1e-12);
    let r = pearson_similarity(&impact(vec![1.0, 2.0, 3.0]), &impact(vec![2.0, 4.0, 8.0])).unwrap();
    assert!((r - 0.9819805060619657).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pearson_matches_two_pass_oracle(a in varied(12), b in varied(12)) {
        let r = pearson_similarity(&impact(a.clone()), &impact(b.clone())).unwrap();
        prop_assert!((r - two_pass_pearson(&a, &b)).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn self_and_negated_similarity(a in varied(9)) {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert_eq!(pearson_similarity(&impact(a.clone()), &impact(a.clone())).unwrap(), 1.0);
        prop_assert!((pearson_similarity(&impact(a), &impact(neg)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal(vectors in prop::collection::vec(varied(8), 3 * 4)) {
        let mut map = BTreeMap::new();
        for (i, v) in vectors.into_iter().enumerate() {
            map.insert((format!("m{}", i / 4), format!("s{}", i % 4)), impact(v));
        }
        let m = build_matrix(&map, Domain::Time).unwrap();
        prop_assert_eq!(m.models().len(), 3);
        for i in 0..3 {
            prop_assert_eq!(m.get(i, i), Some(1.0));
            for j in 0..3 {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn ucr_text_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 5), 1..8)) {
        let labels = (0..rows.len()).map(|i| format!("c{}", i % 3)).collect();
        let d = Dataset::new(rows.into_iter().map(|r| Series::new(r).unwrap()).collect(), Some(labels)).unwrap();
        prop_assert_eq!(parse_ucr(&format_ucr(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn documents_round_trip_bit_exactly(phi in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite() && v.abs() < 1e100), 4), base in -1.0f64..1.0) {
        let prediction = base + phi.iter().sum::<f64>();
        let doc = ExplanationDocument {
            schema_version: SCHEMA_VERSION.into(),
            dataset: "d".into(),
            specimen_index: 0,
            model: "m".into(),
            target_class: None,
            mapping: MappingDescriptor { kind: "time_slice".into(), fragments: 4, replacement: Some("zero".into()), edges: vec![0, 2, 4, 6, 8], series_length: 8 },
            classes: vec![ClassImpact { class: "a".into(), phi, base_value: base, prediction }],
            intermediates: None,
            run: RunMetadata { runs: 1, budget: 1000, seed: 0, model_queries: 16, exact_mode: true, environment_classes: false },
        };
        let back = ExplanationDocument::from_json(&doc.to_json()).unwrap();
        for (a, b) in back.classes[0].phi.iter().zip(&doc.classes[0].phi) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn plot_csv_reproduces_phi(phi in prop::collection::vec(-5.0f64..5.0, 4)) {
        let prediction = phi.iter().sum::<f64>();
        let doc = ExplanationDocument {
            schema_version: SCHEMA_VERSION.into(),
            dataset: "d".into(),
            specimen_index: 0,
            model: "m".into(),
            target_class: None,
            mapping: MappingDescriptor { kind: "time_slice".into(), fragments: 4, replacement: Some("zero".into()), edges: vec![0, 3, 5, 8, 10], series_length: 10 },
            classes: vec![ClassImpact { class: "a".into(), phi: phi.clone(), base_value: 0.0, prediction }],
            intermediates: None,
            run: RunMetadata { runs: 1, budget: 1000, seed: 0, model_queries: 16, exact_mode: true, environment_classes: false },
        };
        let x = Series::new((0..10).map(f64::from).collect()).unwrap();
        let csv = plot_csv(&doc, &x).unwrap();
        let mut seen = BTreeMap::new();
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            seen.insert(cols[2].parse::<usize>().unwrap(), cols[3].parse::<f64>().unwrap());
        }
        prop_assert_eq!(seen.into_values().collect::<Vec<_>>(), phi);
    }
}
