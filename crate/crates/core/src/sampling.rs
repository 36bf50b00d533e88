//! Pool-to-train transfer rules and the data treatments of the non-AL baselines.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{self, ClassLabel, Dataset, Partition, SubjectId};
use crate::error::{Error, Result};
use crate::uncertainty::ScoredInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Move the `k` most uncertain individual instances.
    Instance,
    /// Move every pool instance of the `k` most uncertain subjects of the hardest class.
    Subject,
}

/// Which label groups pool instances into classes in the first phase of subject selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassGrouping {
    #[default]
    TrueLabel,
    PredictedLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDecision {
    /// Ascending.
    pub moved_instance_ids: Vec<u64>,
    /// In selection order; empty in instance mode.
    pub moved_subjects: Vec<SubjectId>,
    pub target_class: Option<ClassLabel>,
    pub strategy: SamplingMode,
}

/// The `min(k, n)` highest-scoring instances; equal scores prefer the lower instance id.
pub fn select_instances_topk(scored: &[ScoredInstance], k: usize) -> Result<TransferDecision> {
    if scored.is_empty() {
        return Err(Error::PoolExhausted);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be ≥ 1".into()));
    }
    let mut order: Vec<&ScoredInstance> = scored.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .value
            .total_cmp(&a.score.value)
            .then(a.instance_id.cmp(&b.instance_id))
    });
    let mut moved: Vec<u64> = order.iter().take(k).map(|s| s.instance_id).collect();
    moved.sort_unstable();
    Ok(TransferDecision {
        moved_instance_ids: moved,
        moved_subjects: Vec::new(),
        target_class: None,
        strategy: SamplingMode::Instance,
    })
}

/// Two-phase subject selection.
///
/// Phase 1 averages the scores per class and picks the class with the highest
/// mean (ties: lower class index). Phase 2 averages the scores per subject of
/// that class and takes the `k` highest (ties: smaller subject id). Every
/// scored instance of the chosen subjects moves. If the winning class has no
/// subjects in the pool (possible only with predicted-label grouping) the next
/// class in phase-1 order is used.
pub fn select_subjects_two_phase(
    scored: &[ScoredInstance],
    subject_of: &HashMap<u64, SubjectId>,
    k: usize,
    grouping: ClassGrouping,
) -> Result<TransferDecision> {
    if scored.is_empty() {
        return Err(Error::PoolExhausted);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be ≥ 1".into()));
    }
    let subject = |s: &ScoredInstance| -> Result<&SubjectId> {
        subject_of.get(&s.instance_id).ok_or_else(|| {
            Error::InvalidInput(format!("instance {} has no subject", s.instance_id))
        })
    };

    let mut class_sums: BTreeMap<ClassLabel, (f64, usize)> = BTreeMap::new();
    for s in scored {
        let class = match grouping {
            ClassGrouping::TrueLabel => s.true_label,
            ClassGrouping::PredictedLabel => s.predicted_label,
        };
        let e = class_sums.entry(class).or_insert((0.0, 0));
        e.0 += s.score.value;
        e.1 += 1;
    }
    let mut classes: Vec<(ClassLabel, f64)> = class_sums
        .into_iter()
        .map(|(c, (sum, n))| (c, sum / n as f64))
        .collect();
    classes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    for (class, _) in classes {
        let mut subject_sums: BTreeMap<&SubjectId, (f64, usize)> = BTreeMap::new();
        for s in scored.iter().filter(|s| s.true_label == class) {
            let e = subject_sums.entry(subject(s)?).or_insert((0.0, 0));
            e.0 += s.score.value;
            e.1 += 1;
        }
        if subject_sums.is_empty() {
            continue;
        }
        let mut subjects: Vec<(&SubjectId, f64)> = subject_sums
            .into_iter()
            .map(|(id, (sum, n))| (id, sum / n as f64))
            .collect();
        subjects.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        let winners: Vec<SubjectId> = subjects
            .into_iter()
            .take(k)
            .map(|(id, _)| id.clone())
            .collect();
        let winner_set: BTreeSet<&SubjectId> = winners.iter().collect();
        let mut moved = Vec::new();
        for s in scored {
            if winner_set.contains(subject(s)?) {
                moved.push(s.instance_id);
            }
        }
        moved.sort_unstable();
        return Ok(TransferDecision {
            moved_instance_ids: moved,
            moved_subjects: winners,
            target_class: Some(class),
            strategy: SamplingMode::Subject,
        });
    }
    Err(Error::PoolExhausted)
}

/// Instance id → subject, for [`select_subjects_two_phase`].
pub fn subject_map(dataset: &Dataset) -> HashMap<u64, SubjectId> {
    dataset
        .instances()
        .iter()
        .map(|inst| (inst.instance_id, inst.subject.clone()))
        .collect()
}

/// Apply a decision to a partition. Every moved id must currently be in the pool.
pub fn apply_transfer(
    partition: &mut Partition,
    decision: &TransferDecision,
    id_index: &BTreeMap<u64, usize>,
) -> Result<()> {
    let indices = decision
        .moved_instance_ids
        .iter()
        .map(|id| {
            id_index
                .get(id)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("unknown instance id {id}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    partition.transfer(&indices)
}

/// Random undersampling baseline: `subjects_per_class` seeded-random non-test
/// subjects per class form the training set. The remaining non-test instances
/// are left in the pool, which this baseline never uses.
pub fn random_undersample(
    dataset: &Dataset,
    partition: &Partition,
    subjects_per_class: usize,
    rng_seed: u64,
) -> Result<Partition> {
    if subjects_per_class == 0 {
        return Err(Error::Config("subjects_per_class must be ≥ 1".into()));
    }
    let chosen = data::choose_subjects_per_class(partition, dataset, subjects_per_class, rng_seed)?;
    Ok(data::assign_subjects_to_train(partition, dataset, &chosen))
}

/// Per-class appearance multipliers: `factor` for the minority classes, 1 elsewhere.
///
/// `factor` must be 2 or 3 unless `allow_any_factor` is set (then any `factor ≥ 1`).
pub fn build_oversample_multipliers(
    num_classes: usize,
    factor: usize,
    minority_classes: &[ClassLabel],
    allow_any_factor: bool,
) -> Result<Vec<usize>> {
    if factor == 0 || (!allow_any_factor && !(2..=3).contains(&factor)) {
        return Err(Error::Config(format!(
            "oversampling factor must be 2 or 3, got {factor}"
        )));
    }
    let mut m = vec![1; num_classes];
    for c in minority_classes {
        if c.0 >= num_classes {
            return Err(Error::Config(format!(
                "minority class {c} out of range for {num_classes} classes"
            )));
        }
        m[c.0] = factor;
    }
    Ok(m)
}

/// Classes whose training count is below half the mean per-class count.
pub fn default_minority_classes(counts: &[usize]) -> Vec<ClassLabel> {
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    counts
        .iter()
        .enumerate()
        .filter(|&(_, &n)| (n as f64) < mean / 2.0)
        .map(|(c, _)| ClassLabel(c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::grouped;
    use crate::data::split_by_subject;
    use crate::uncertainty::{Method, UncertaintyScore};

    fn si(id: u64, value: f64, label: usize) -> ScoredInstance {
        ScoredInstance {
            instance_id: id,
            score: UncertaintyScore {
                value,
                method: Method::LeastConfident,
            },
            predicted_label: ClassLabel(label),
            true_label: ClassLabel(label),
        }
    }

    #[test]
    fn topk_examples() {
        let scored = vec![si(0, 0.9, 0), si(1, 0.5, 0), si(2, 0.1, 0)];
        assert_eq!(select_instances_topk(&scored, 2).unwrap().moved_instance_ids, vec![0, 1]);
        assert_eq!(select_instances_topk(&scored, 10).unwrap().moved_instance_ids, vec![0, 1, 2]);
        let tied = vec![si(7, 0.5, 0), si(3, 0.5, 0)];
        assert_eq!(select_instances_topk(&tied, 1).unwrap().moved_instance_ids, vec![3]);
        assert_eq!(select_instances_topk(&[], 1), Err(Error::PoolExhausted));
    }

    #[test]
    fn two_phase_toy_pool() {
        // class 0: s1 = {0.9, 0.9}, s2 = {0.7, 0.7} → mean 0.8; class 1: s3 = {0.2, 0.2}.
        let scored = vec![
            si(0, 0.9, 0),
            si(1, 0.9, 0),
            si(2, 0.7, 0),
            si(3, 0.7, 0),
            si(4, 0.2, 1),
            si(5, 0.2, 1),
        ];
        let map: HashMap<u64, SubjectId> = [
            (0, "s1"),
            (1, "s1"),
            (2, "s2"),
            (3, "s2"),
            (4, "s3"),
            (5, "s3"),
        ]
        .into_iter()
        .map(|(i, s)| (i, SubjectId::from(s)))
        .collect();
        let d = select_subjects_two_phase(&scored, &map, 1, ClassGrouping::TrueLabel).unwrap();
        assert_eq!(d.target_class, Some(ClassLabel(0)));
        assert_eq!(d.moved_subjects, vec![SubjectId::from("s1")]);
        assert_eq!(d.moved_instance_ids, vec![0, 1]);
    }

    #[test]
    fn two_phase_saturates_and_breaks_ties() {
        let map: HashMap<u64, SubjectId> =
            [(0, "b"), (1, "a"), (2, "c")].into_iter().map(|(i, s)| (i, SubjectId::from(s))).collect();
        let single = vec![si(0, 0.3, 1)];
        let d = select_subjects_two_phase(&single, &map, 2, ClassGrouping::TrueLabel).unwrap();
        assert_eq!(d.moved_subjects, vec![SubjectId::from("b")]);

        let equal = vec![si(0, 0.5, 0), si(1, 0.5, 0), si(2, 0.5, 1)];
        let d = select_subjects_two_phase(&equal, &map, 1, ClassGrouping::TrueLabel).unwrap();
        assert_eq!(d.target_class, Some(ClassLabel(0)));
        assert_eq!(d.moved_subjects, vec![SubjectId::from("a")]);
    }

    #[test]
    fn predicted_grouping_falls_back_when_class_has_no_subjects() {
        let map: HashMap<u64, SubjectId> =
            [(0, "x"), (1, "y")].into_iter().map(|(i, s)| (i, SubjectId::from(s))).collect();
        let mut a = si(0, 0.9, 0);
        a.predicted_label = ClassLabel(2);
        let b = si(1, 0.1, 1);
        let d = select_subjects_two_phase(&[a, b], &map, 1, ClassGrouping::PredictedLabel).unwrap();
        // class 2 wins phase 1 but no subject truly belongs to it, so class 1 is used.
        assert_eq!(d.target_class, Some(ClassLabel(1)));
        assert_eq!(d.moved_instance_ids, vec![1]);
    }

    #[test]
    fn oversample_multipliers() {
        let m = build_oversample_multipliers(4, 2, &[ClassLabel(1), ClassLabel(2)], false).unwrap();
        assert_eq!(m, vec![1, 2, 2, 1]);
        assert_eq!(build_oversample_multipliers(4, 3, &[], false).unwrap(), vec![1; 4]);
        assert!(build_oversample_multipliers(4, 4, &[ClassLabel(1)], false).is_err());
        assert_eq!(
            build_oversample_multipliers(2, 5, &[ClassLabel(1)], true).unwrap(),
            vec![1, 5]
        );
        assert!(build_oversample_multipliers(2, 2, &[ClassLabel(2)], false).is_err());
    }

    #[test]
    fn minority_default_matches_rare_classes() {
        assert_eq!(
            default_minority_classes(&[160, 5, 6, 29]),
            vec![ClassLabel(1), ClassLabel(2)]
        );
        assert_eq!(
            default_minority_classes(&[640, 60, 60, 160]),
            vec![ClassLabel(1), ClassLabel(2)]
        );
    }

    #[test]
    fn random_undersample_counts_and_determinism() {
        let ds = grouped(&[8, 5, 5, 6], 20);
        let p = split_by_subject(&ds, 0.2, 1).unwrap();
        let a = random_undersample(&ds, &p, 4, 3).unwrap();
        assert_eq!(a.train.len(), 320);
        assert_eq!(a, random_undersample(&ds, &p, 4, 3).unwrap());
        assert!(random_undersample(&ds, &p, 5, 3).is_err());
        a.validate(&ds).unwrap();
    }

    #[test]
    fn undersample_everything_is_full_training() {
        let ds = grouped(&[4, 4], 3);
        let p = split_by_subject(&ds, 0.25, 1).unwrap();
        let all = random_undersample(&ds, &p, 3, 0).unwrap();
        assert_eq!(all.train, p.non_test());
        assert!(all.pool.is_empty());
    }
}
