//! Experiment orchestration: the active-learning loop, the non-AL baselines,
//! and multi-seed suites.
//!
//! One active-learning run is
//!
//! ```text
//! split test subjects → balanced seed → for m in 0..=M {
//!     (m > 0) score pool with model m−1, transfer top-k
//!     fit model m from scratch, optionally fit T, evaluate
//! }
//! ```
//!
//! and the best iteration is the one with the highest selection F1 (earliest on ties).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calibration::{argmax_preserved, fit_temperature};
use crate::classifier::{
    inverse_frequency_weights, predict_proba_with, Model, ModelFactory, Prediction,
    ReferenceClassifier, TrainSettings,
};
use crate::data::{select_balanced_seed, split_by_subject, ClassLabel, Dataset, Partition};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, confusion, macro_f1_with, nll, AbsentClass};
use crate::par::{derive_seed, Execution};
use crate::sampling::{
    apply_transfer, build_oversample_multipliers, default_minority_classes, random_undersample,
    select_instances_topk, select_subjects_two_phase, subject_map, ClassGrouping, SamplingMode,
    TransferDecision,
};
use crate::uncertainty::{score_pool_with, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Train on every non-test instance as-is.
    Unbalanced,
    /// Every non-test instance, inverse-frequency class weights in the loss.
    ClassWeighting,
    RandomUndersample,
    /// Minority classes appear `factor` times per epoch, duplicates jittered.
    Oversample { factor: usize },
    ActiveLearning { method: Method },
}

impl Strategy {
    pub fn is_active_learning(&self) -> bool {
        matches!(self, Strategy::ActiveLearning { .. })
    }

    /// Row title matching the usual result-table wording.
    pub fn title(&self) -> String {
        match self {
            Strategy::Unbalanced => "Unbalanced".into(),
            Strategy::ClassWeighting => "Inverse Frequency Class Weighting".into(),
            Strategy::RandomUndersample => "Random Undersampling".into(),
            Strategy::Oversample { factor } => format!("Oversampling (x{factor}, jitter)"),
            Strategy::ActiveLearning { method } => format!("{} Sampling", method.title()),
        }
    }

    /// Short token used in config files.
    pub fn token(&self) -> String {
        match self {
            Strategy::Unbalanced => "unbalanced".into(),
            Strategy::ClassWeighting => "class-weighting".into(),
            Strategy::RandomUndersample => "random-undersample".into(),
            Strategy::Oversample { factor } => format!("oversample-x{factor}"),
            Strategy::ActiveLearning { method } => format!("al-{}", method.name()),
        }
    }

    pub fn parse_token(token: &str) -> Result<Self> {
        let t = token.trim().to_ascii_lowercase().replace('_', "-");
        match t.as_str() {
            "unbalanced" => return Ok(Strategy::Unbalanced),
            "class-weighting" | "inverse-frequency" => return Ok(Strategy::ClassWeighting),
            "random-undersample" | "undersample" => return Ok(Strategy::RandomUndersample),
            _ => {}
        }
        if let Some(f) = t.strip_prefix("oversample-x") {
            let factor = f
                .parse()
                .map_err(|_| Error::Config(format!("bad oversampling factor in '{token}'")))?;
            return Ok(Strategy::Oversample { factor });
        }
        if let Some(m) = t.strip_prefix("al-") {
            return Ok(Strategy::ActiveLearning { method: m.parse()? });
        }
        Err(Error::Config(format!("unknown strategy '{token}'")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Where the temperature is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationSplit {
    /// The current pool (labelled, never trained on, disjoint from test).
    #[default]
    PoolSlice,
    /// The hold-out test set. Leaks test labels into scoring.
    PaperFaithfulTest,
}

/// Which split's macro-F1 picks the best iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionSplit {
    /// The hold-out test set. Optimistic, but matches the reference protocol.
    #[default]
    Test,
    /// The current pool.
    PoolSlice,
}

/// Granularity of test metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalLevel {
    #[default]
    Instance,
    /// One prediction per test subject by majority vote (ties: lower class).
    SubjectVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    pub strategy: Strategy,
    pub sampling_mode: SamplingMode,
    /// Instances (instance mode) or subjects (subject mode) moved per iteration.
    pub k: usize,
    /// Number of transfer iterations `M`; the run records `M + 1` models.
    pub iterations: usize,
    pub seed_subjects_per_class: usize,
    /// `None` uses the smallest non-test subject count over classes.
    pub undersample_subjects_per_class: Option<usize>,
    /// `None` picks classes below half the mean per-class count.
    pub minority_classes: Option<Vec<usize>>,
    pub allow_any_oversample_factor: bool,
    pub calibrated: bool,
    pub calibration_split: CalibrationSplit,
    pub selection_split: SelectionSplit,
    pub class_grouping: ClassGrouping,
    pub eval_level: EvalLevel,
    pub absent_class: AbsentClass,
    pub test_fraction: f64,
    pub train: TrainSettings,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            label: String::new(),
            strategy: Strategy::ActiveLearning {
                method: Method::Ratio,
            },
            sampling_mode: SamplingMode::Subject,
            k: 1,
            iterations: 10,
            seed_subjects_per_class: 2,
            undersample_subjects_per_class: None,
            minority_classes: None,
            allow_any_oversample_factor: false,
            calibrated: false,
            calibration_split: CalibrationSplit::PoolSlice,
            selection_split: SelectionSplit::Test,
            class_grouping: ClassGrouping::TrueLabel,
            eval_level: EvalLevel::Instance,
            absent_class: AbsentClass::Zero,
            test_fraction: 0.2,
            train: TrainSettings::default(),
            rng_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn display_label(&self) -> String {
        if self.label.is_empty() {
            self.strategy.title()
        } else {
            self.label.clone()
        }
    }

    /// Checks that need no dataset.
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if let Strategy::Oversample { factor } = self.strategy {
            if factor == 0 || (!self.allow_any_oversample_factor && !(2..=3).contains(&factor)) {
                return Err(Error::Config(format!(
                    "oversampling factor must be 2 or 3, got {factor}"
                )));
            }
        }
        if self.strategy.is_active_learning() {
            if self.k == 0 {
                return Err(Error::Config("k must be ≥ 1".into()));
            }
            if self.seed_subjects_per_class == 0 {
                return Err(Error::Config("seed_subjects_per_class must be ≥ 1".into()));
            }
        }
        if self.undersample_subjects_per_class == Some(0) {
            return Err(Error::Config(
                "undersample_subjects_per_class must be ≥ 1".into(),
            ));
        }
        let class_free = TrainSettings {
            class_weights: None,
            oversample_multipliers: None,
            ..self.train.clone()
        };
        class_free
            .validate(2)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks against a concrete dataset.
    pub fn validate_for(&self, dataset: &Dataset) -> Result<()> {
        self.validate()?;
        let c = dataset.num_classes();
        self.train
            .validate(c)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(m) = &self.minority_classes {
            if let Some(bad) = m.iter().find(|&&x| x >= c) {
                return Err(Error::Config(format!(
                    "minority class {bad} out of range for {c} classes"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub temperature: f64,
    pub nll_before: f64,
    pub nll_after: f64,
    pub fit_set_size: usize,
    pub split: CalibrationSplit,
    /// Every pool and test prediction keeps its argmax under the fitted temperature.
    pub argmax_preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub m: usize,
    pub train_counts_per_class: Vec<usize>,
    pub train_subjects: usize,
    pub pool_size: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub test_nll: f64,
    /// Macro-F1 on the selection split; `None` when that split is empty.
    pub selection_f1: Option<f64>,
    pub temperature: Option<f64>,
    pub calibration: Option<CalibrationRecord>,
    /// The transfer applied before this iteration's training (absent at m = 0).
    pub transfer: Option<TransferDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub best_index: usize,
    /// The pool ran out before `M` iterations.
    pub exhausted_early: bool,
    #[serde(skip)]
    pub initial_partition: Partition,
    #[serde(skip)]
    pub final_partition: Partition,
}

impl RunResult {
    pub fn best(&self) -> &IterationRecord {
        &self.records[self.best_index]
    }
}

/// Run one experiment with the built-in classifier.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_with(
        dataset,
        config,
        &*ReferenceClassifier::factory(),
        Execution::default(),
    )
}

/// The partition a run starts from: test split plus, for AL, the balanced seed.
pub fn initial_partition(dataset: &Dataset, config: &ExperimentConfig) -> Result<Partition> {
    let seed = config.rng_seed;
    let split = split_by_subject(dataset, config.test_fraction, derive_seed(seed, 1))?;
    match config.strategy {
        Strategy::ActiveLearning { .. } => select_balanced_seed(
            &split,
            dataset,
            config.seed_subjects_per_class,
            derive_seed(seed, 2),
            false,
        ),
        Strategy::RandomUndersample => {
            let per_class = match config.undersample_subjects_per_class {
                Some(n) => n,
                None => smallest_class_subject_count(dataset, &split),
            };
            random_undersample(dataset, &split, per_class, derive_seed(seed, 3))
        }
        _ => Ok(Partition {
            train: split.non_test(),
            pool: Default::default(),
            test: split.test,
        }),
    }
}

fn smallest_class_subject_count(dataset: &Dataset, partition: &Partition) -> usize {
    let mut subjects: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); dataset.num_classes()];
    for i in partition.non_test() {
        let inst = dataset.instance(i);
        subjects[inst.label.0].insert(inst.subject.as_str());
    }
    subjects.iter().map(BTreeSet::len).min().unwrap_or(0)
}

pub fn run_experiment_with(
    dataset: &Dataset,
    config: &ExperimentConfig,
    factory: &ModelFactory,
    exec: Execution,
) -> Result<RunResult> {
    config.validate_for(dataset)?;
    let initial = initial_partition(dataset, config)?;
    let c = dataset.num_classes();
    let seed = config.rng_seed;

    let mut settings = config.train.clone();
    match config.strategy {
        Strategy::ClassWeighting => {
            let train: Vec<usize> = initial.train.iter().copied().collect();
            settings.class_weights = Some(inverse_frequency_weights(dataset, &train)?);
        }
        Strategy::Oversample { factor } => {
            let minority: Vec<ClassLabel> = match &config.minority_classes {
                Some(m) => m.iter().map(|&x| ClassLabel(x)).collect(),
                None => default_minority_classes(&dataset.class_counts(&initial.train)),
            };
            settings.oversample_multipliers = Some(build_oversample_multipliers(
                c,
                factor,
                &minority,
                config.allow_any_oversample_factor,
            )?);
        }
        _ => {}
    }

    let iterations = if config.strategy.is_active_learning() {
        config.iterations
    } else {
        0
    };
    let method = match config.strategy {
        Strategy::ActiveLearning { method } => Some(method),
        _ => None,
    };
    let subjects = subject_map(dataset);
    let id_index = dataset.id_index();
    let test_idx: Vec<usize> = initial.test.iter().copied().collect();

    let mut partition = initial.clone();
    let mut records = Vec::with_capacity(iterations + 1);
    let mut pending_transfer: Option<TransferDecision> = None;
    let mut exhausted_early = false;

    for m in 0..=iterations {
        let train_idx: Vec<usize> = partition.train.iter().copied().collect();
        let pool_idx: Vec<usize> = partition.pool.iter().copied().collect();
        let mut model: Box<dyn Model> = factory(dataset);
        settings.rng_seed = derive_seed(seed, 100 + m as u64);
        model.fit(dataset, &train_idx, &settings)?;

        let test_pred = predict_proba_with(model.as_ref(), dataset, &test_idx, exec)?;
        let pool_pred = predict_proba_with(model.as_ref(), dataset, &pool_idx, exec)?;

        let calibration = if config.calibrated && method.is_some() {
            let (fit_idx, fit_pred) = match config.calibration_split {
                CalibrationSplit::PoolSlice => (&pool_idx, &pool_pred),
                CalibrationSplit::PaperFaithfulTest => (&test_idx, &test_pred),
            };
            if fit_idx.is_empty() {
                None
            } else {
                let pairs: Vec<_> = fit_idx
                    .iter()
                    .zip(fit_pred)
                    .map(|(&i, p)| (p.logits.clone(), dataset.label(i)))
                    .collect();
                let fit = fit_temperature(&pairs)?;
                let preserved = pool_pred
                    .iter()
                    .chain(&test_pred)
                    .all(|p| argmax_preserved(&p.logits, fit.temperature));
                Some(CalibrationRecord {
                    temperature: fit.temperature,
                    nll_before: fit.nll_before,
                    nll_after: fit.nll_after,
                    fit_set_size: fit.fit_set_size,
                    split: config.calibration_split,
                    argmax_preserved: preserved,
                })
            }
        } else {
            None
        };
        let temperature = calibration.map(|c| c.temperature);

        let (acc, f1) = evaluate(dataset, &test_idx, &test_pred, config.eval_level, config.absent_class)?;
        let test_nll = nll(&test_pred
            .iter()
            .zip(&test_idx)
            .map(|(p, &i)| (p.probs.clone(), dataset.label(i)))
            .collect::<Vec<_>>())?;
        let selection_f1 = match config.selection_split {
            SelectionSplit::Test => Some(f1),
            SelectionSplit::PoolSlice if pool_idx.is_empty() => None,
            SelectionSplit::PoolSlice => Some(
                evaluate(dataset, &pool_idx, &pool_pred, config.eval_level, config.absent_class)?.1,
            ),
        };

        records.push(IterationRecord {
            m,
            train_counts_per_class: dataset.class_counts(&train_idx),
            train_subjects: partition.subjects_of(dataset, &partition.train).len(),
            pool_size: pool_idx.len(),
            accuracy: acc,
            macro_f1: f1,
            test_nll,
            selection_f1,
            temperature,
            calibration,
            transfer: pending_transfer.take(),
        });

        if m == iterations {
            break;
        }
        let method = method.expect("only AL runs iterate");
        if pool_idx.is_empty() {
            exhausted_early = true;
            break;
        }
        let scored = score_pool_with(model.as_ref(), dataset, &pool_idx, method, temperature, exec)?;
        let decision = match config.sampling_mode {
            SamplingMode::Instance => select_instances_topk(&scored, config.k),
            SamplingMode::Subject => {
                select_subjects_two_phase(&scored, &subjects, config.k, config.class_grouping)
            }
        };
        let decision = match decision {
            Ok(d) => d,
            Err(Error::PoolExhausted) => {
                exhausted_early = true;
                break;
            }
            Err(e) => return Err(e),
        };
        apply_transfer(&mut partition, &decision, &id_index)?;
        pending_transfer = Some(decision);
    }

    let best_index = best_record(&records);
    Ok(RunResult {
        label: config.display_label(),
        seed,
        records,
        best_index,
        exhausted_early,
        initial_partition: initial,
        final_partition: partition,
    })
}

/// Highest selection F1, earliest iteration on ties; records without a
/// selection score are skipped (index 0 if none has one).
pub fn best_record(records: &[IterationRecord]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in records.iter().enumerate() {
        if let Some(score) = r.selection_f1 {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
    }
    best.map_or(0, |(i, _)| i)
}

fn evaluate(
    dataset: &Dataset,
    idx: &[usize],
    predictions: &[Prediction],
    level: EvalLevel,
    absent: AbsentClass,
) -> Result<(f64, f64)> {
    let pairs: Vec<(ClassLabel, ClassLabel)> = match level {
        EvalLevel::Instance => idx
            .iter()
            .zip(predictions)
            .map(|(&i, p)| (dataset.label(i), p.probs.argmax()))
            .collect(),
        EvalLevel::SubjectVote => {
            let mut votes: BTreeMap<&str, (ClassLabel, Vec<usize>)> = BTreeMap::new();
            for (&i, p) in idx.iter().zip(predictions) {
                let inst = dataset.instance(i);
                let entry = votes
                    .entry(inst.subject.as_str())
                    .or_insert_with(|| (inst.label, vec![0; dataset.num_classes()]));
                entry.1[p.probs.argmax().0] += 1;
            }
            votes
                .into_values()
                .map(|(truth, counts)| {
                    let mut best = 0;
                    for (c, &n) in counts.iter().enumerate() {
                        if n > counts[best] {
                            best = c;
                        }
                    }
                    (truth, ClassLabel(best))
                })
                .collect()
        }
    };
    let cm = confusion(&pairs, dataset.num_classes())?;
    Ok((accuracy(&cm)?, macro_f1_with(&cm, absent)?))
}

/// Re-apply the recorded transfers to `initial`.
pub fn replay_transfers(
    dataset: &Dataset,
    initial: &Partition,
    records: &[IterationRecord],
) -> Result<Partition> {
    let id_index = dataset.id_index();
    let mut partition = initial.clone();
    for decision in records.iter().filter_map(|r| r.transfer.as_ref()) {
        apply_transfer(&mut partition, decision, &id_index)?;
    }
    Ok(partition)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub accuracy: Summary,
    pub macro_f1: Summary,
}

/// Run every config `repeats` times with seeds `base_seed .. base_seed + repeats`.
///
/// Runs are independent, so they are spread over `exec`; each run itself is
/// sequential. Row order follows `configs` regardless of scheduling.
pub fn run_suite(
    dataset: &Dataset,
    configs: &[ExperimentConfig],
    repeats: usize,
    base_seed: u64,
    exec: Execution,
) -> Result<Vec<SuiteRow>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be ≥ 1".into()));
    }
    for cfg in configs {
        cfg.validate_for(dataset).map_err(|e| Error::InRun {
            label: cfg.display_label(),
            seed: base_seed,
            source: Box::new(e),
        })?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| (0..repeats as u64).map(move |r| (i, base_seed + r)))
        .collect();
    let factory = ReferenceClassifier::factory();
    let results = exec.try_map(&jobs, |&(i, seed)| {
        let mut cfg = configs[i].clone();
        cfg.rng_seed = seed;
        run_experiment_with(dataset, &cfg, &*factory, Execution::Sequential).map_err(|e| {
            Error::InRun {
                label: cfg.display_label(),
                seed,
                source: Box::new(e),
            }
        })
    })?;
    let mut results = results.into_iter();
    Ok(configs
        .iter()
        .map(|cfg| {
            let runs: Vec<RunResult> = results.by_ref().take(repeats).collect();
            let acc: Vec<f64> = runs.iter().map(|r| r.best().accuracy).collect();
            let f1: Vec<f64> = runs.iter().map(|r| r.best().macro_f1).collect();
            SuiteRow {
                label: cfg.display_label(),
                config: cfg.clone(),
                accuracy: Summary::of(&acc),
                macro_f1: Summary::of(&f1),
                runs,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GeneratorSpec};

    fn small() -> Dataset {
        generate(&GeneratorSpec {
            subjects_per_class: vec![8, 4, 4, 5],
            instances_per_subject: 6,
            feature_dim: 6,
            rng_seed: 5,
            ..GeneratorSpec::default()
        })
        .unwrap()
    }

    fn fast(strategy: Strategy) -> ExperimentConfig {
        ExperimentConfig {
            strategy,
            iterations: 3,
            train: TrainSettings {
                epochs: 5,
                hidden_width: 8,
                ..TrainSettings::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_iterations_gives_single_record() {
        let cfg = ExperimentConfig {
            iterations: 0,
            ..fast(Strategy::ActiveLearning { method: Method::Entropy })
        };
        let run = run_experiment(&small(), &cfg).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.best_index, 0);
        assert!(run.records[0].transfer.is_none());
    }

    #[test]
    fn baselines_run_once_without_transfers() {
        let ds = small();
        for s in [
            Strategy::Unbalanced,
            Strategy::ClassWeighting,
            Strategy::RandomUndersample,
            Strategy::Oversample { factor: 2 },
        ] {
            let run = run_experiment(&ds, &fast(s)).unwrap();
            assert_eq!(run.records.len(), 1, "{s}");
            assert!(run.records[0].transfer.is_none());
        }
    }

    #[test]
    fn subject_mode_grows_one_subject_per_iteration() {
        let ds = small();
        let run = run_experiment(&ds, &fast(Strategy::ActiveLearning { method: Method::Margin })).unwrap();
        assert_eq!(run.records.len(), 4);
        for w in run.records.windows(2) {
            assert_eq!(w[1].train_subjects, w[0].train_subjects + 1);
            assert_eq!(w[1].transfer.as_ref().unwrap().moved_subjects.len(), 1);
        }
        assert!(run.final_partition.train_pool_subject_closed(&ds));
        run.final_partition.validate(&ds).unwrap();
    }

    #[test]
    fn pool_exhaustion_stops_early() {
        let ds = small();
        let cfg = ExperimentConfig {
            iterations: 50,
            k: 3,
            ..fast(Strategy::ActiveLearning { method: Method::Ratio })
        };
        let run = run_experiment(&ds, &cfg).unwrap();
        assert!(run.exhausted_early);
        assert!(run.final_partition.pool.is_empty());
        assert_eq!(
            replay_transfers(&ds, &run.initial_partition, &run.records).unwrap(),
            run.final_partition
        );
    }

    #[test]
    fn invalid_config_rejected_up_front() {
        let cfg = ExperimentConfig {
            k: 0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&small(), &cfg), Err(Error::Config(_))));
        let cfg = fast(Strategy::Oversample { factor: 5 });
        assert!(matches!(run_experiment(&small(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn best_record_prefers_earliest_tie() {
        let mk = |m, f| IterationRecord {
            m,
            train_counts_per_class: vec![],
            train_subjects: 0,
            pool_size: 0,
            accuracy: 0.0,
            macro_f1: f,
            test_nll: 0.0,
            selection_f1: Some(f),
            temperature: None,
            calibration: None,
            transfer: None,
        };
        assert_eq!(best_record(&[mk(0, 0.5), mk(1, 0.7), mk(2, 0.7)]), 1);
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Summary::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn strategy_tokens_round_trip() {
        for s in [
            Strategy::Unbalanced,
            Strategy::ClassWeighting,
            Strategy::RandomUndersample,
            Strategy::Oversample { factor: 3 },
            Strategy::ActiveLearning { method: Method::LeastConfident },
        ] {
            assert_eq!(Strategy::parse_token(&s.token()).unwrap(), s);
        }
        assert!(Strategy::parse_token("magic").is_err());
    }
}
