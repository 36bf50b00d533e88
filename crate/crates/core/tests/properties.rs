use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use alcurate::data::{split_by_subject, ClassLabel};
use alcurate::datagen::{generate, GeneratorSpec};
use alcurate::experiment::{run_experiment, ExperimentConfig, Strategy};
use alcurate::metrics::{accuracy, confusion, macro_f1};
use alcurate::sampling::SamplingMode;
use alcurate::uncertainty::Method;

/// Direct per-class precision/recall computation from label lists.
fn naive_macro_f1(truth: &[usize], pred: &[usize], c: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..c {
        let tp = truth.iter().zip(pred).filter(|(t, p)| **t == k && **p == k).count() as f64;
        let fp = truth.iter().zip(pred).filter(|(t, p)| **t != k && **p == k).count() as f64;
        let fn_ = truth.iter().zip(pred).filter(|(t, p)| **t == k && **p != k).count() as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        total += if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    }
    total / c as f64
}

#[test]
fn metrics_match_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let c = rng.random_range(2..=6);
        let n = rng.random_range(1..=80);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let pairs: Vec<_> = truth.iter().zip(&pred).map(|(&t, &p)| (ClassLabel(t), ClassLabel(p))).collect();
        let cm = confusion(&pairs, c).unwrap();
        let acc = truth.iter().zip(&pred).filter(|(t, p)| t == p).count() as f64 / n as f64;
        assert!((accuracy(&cm).unwrap() - acc).abs() <= 1e-12);
        assert!((macro_f1(&cm).unwrap() - naive_macro_f1(&truth, &pred, c)).abs() <= 1e-12);
    }
}

#[test]
fn default_generator_matches_counts_and_groups_subjects() {
    let ds = generate(&GeneratorSpec::default()).unwrap();
    assert_eq!(ds.len(), 1160);
    assert_eq!(ds.subject_labels().len(), 58);

    // Within-subject spread is far below between-subject spread of the same class.
    let dim = ds.feature_dim();
    let mean = |idx: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; dim];
        for &i in idx {
            for (a, x) in m.iter_mut().zip(ds.features(i)) {
                *a += x / idx.len() as f64;
            }
        }
        m
    };
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let groups = ds.subject_indices();
    let mut within = 0.0;
    let mut count = 0.0;
    for idx in groups.values() {
        let m = mean(idx);
        for &i in idx {
            within += dist2(ds.features(i), &m);
            count += 1.0;
        }
    }
    let within = within / count / dim as f64;
    assert!((within - 0.25).abs() < 0.03, "{within}");
    let class0: Vec<Vec<f64>> = groups
        .iter()
        .filter(|(id, _)| ds.subject_labels()[*id] == ClassLabel(0))
        .map(|(_, idx)| mean(idx))
        .collect();
    let centre: Vec<f64> = (0..dim).map(|j| class0.iter().map(|m| m[j]).sum::<f64>() / class0.len() as f64).collect();
    let between = class0.iter().map(|m| dist2(m, &centre)).sum::<f64>() / (class0.len() - 1) as f64 / dim as f64;
    assert!((between - 2.25).abs() < 0.6, "{between}");
}

#[test]
fn subject_split_keeps_subjects_whole() {
    let ds = generate(&GeneratorSpec::default()).unwrap();
    for seed in 0..10 {
        let part = split_by_subject(&ds, 0.2, seed).unwrap();
        let test = part.subjects_of(&ds, &part.test);
        let rest = part.subjects_of(&ds, &part.pool);
        assert!(test.is_disjoint(&rest));
        let per_class: Vec<usize> = ds
            .subjects_by_class()
            .iter()
            .map(|subjects| subjects.iter().filter(|s| test.contains(*s)).count())
            .collect();
        assert_eq!(per_class, vec![8, 1, 1, 2]);
    }
}

#[test]
fn active_learning_runs_stay_leak_free() {
    let ds = generate(&GeneratorSpec {
        subjects_per_class: vec![10, 4, 4, 5],
        instances_per_subject: 6,
        feature_dim: 6,
        ..GeneratorSpec::default()
    })
    .unwrap();
    for mode in [SamplingMode::Subject, SamplingMode::Instance] {
        let cfg = ExperimentConfig {
            sampling_mode: mode,
            k: if mode == SamplingMode::Subject { 1 } else { 6 },
            iterations: 4,
            ..ExperimentConfig::default().with_strategy(Strategy::ActiveLearning { method: Method::Margin })
        };
        let run = run_experiment(&ds, &cfg).unwrap();
        let part = &run.final_partition;
        part.validate(&ds).unwrap();
        let test: BTreeSet<_> = part.subjects_of(&ds, &part.test);
        assert!(test.is_disjoint(&part.subjects_of(&ds, &part.train)));
        assert!(test.is_disjoint(&part.subjects_of(&ds, &part.pool)));
        if mode == SamplingMode::Subject {
            assert!(part.train_pool_subject_closed(&ds));
        }
        let moved: usize = run.records.iter().filter_map(|r| r.transfer.as_ref()).map(|t| t.moved_instance_ids.len()).sum();
        assert_eq!(part.train.len(), run.initial_partition.train.len() + moved);
    }
}
