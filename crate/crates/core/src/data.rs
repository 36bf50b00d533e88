//! Grouped labelled datasets and subject-respecting train/pool/test partitions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub usize);

impl ClassLabel {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opaque subject identifier. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(pub String);

impl SubjectId {
    pub fn new(s: impl Into<String>) -> Self {
        SubjectId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        SubjectId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub instance_id: u64,
    pub subject: SubjectId,
    pub label: ClassLabel,
    pub features: Vec<f64>,
}

/// An ordered collection of instances with a fixed class count and feature dimension.
///
/// Construction through [`Dataset::new`] validates every invariant: unique
/// instance ids, labels below `num_classes`, finite features of one
/// dimension, and a single label per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    num_classes: usize,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>, num_classes: usize, feature_dim: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "a dataset needs at least 2 classes, got {num_classes}"
            )));
        }
        let mut ids = HashSet::with_capacity(instances.len());
        let mut subject_labels: BTreeMap<&SubjectId, ClassLabel> = BTreeMap::new();
        for inst in &instances {
            if !ids.insert(inst.instance_id) {
                return Err(Error::DuplicateInstance(inst.instance_id));
            }
            if inst.label.0 >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "instance {} has label {} but the dataset has {num_classes} classes",
                    inst.instance_id, inst.label
                )));
            }
            if inst.features.len() != feature_dim {
                return Err(Error::InvalidInput(format!(
                    "instance {} has {} features, expected {feature_dim}",
                    inst.instance_id,
                    inst.features.len()
                )));
            }
            if inst.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "instance {} has non-finite features",
                    inst.instance_id
                )));
            }
            match subject_labels.get(&inst.subject) {
                Some(&prev) if prev != inst.label => {
                    return Err(Error::ConflictingLabels {
                        subject: inst.subject.0.clone(),
                        first: prev.0,
                        second: inst.label.0,
                    });
                }
                Some(_) => {}
                None => {
                    subject_labels.insert(&inst.subject, inst.label);
                }
            }
        }
        Ok(Dataset {
            instances,
            num_classes,
            feature_dim,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance(&self, idx: usize) -> &Instance {
        &self.instances[idx]
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn label(&self, idx: usize) -> ClassLabel {
        self.instances[idx].label
    }

    pub fn features(&self, idx: usize) -> &[f64] {
        &self.instances[idx].features
    }

    /// Dataset index of every instance id.
    pub fn id_index(&self) -> BTreeMap<u64, usize> {
        self.instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.instance_id, i))
            .collect()
    }

    /// Subject → its label, in subject order.
    pub fn subject_labels(&self) -> BTreeMap<SubjectId, ClassLabel> {
        self.instances
            .iter()
            .map(|inst| (inst.subject.clone(), inst.label))
            .collect()
    }

    /// Subject → dataset indices of its instances (ascending).
    pub fn subject_indices(&self) -> BTreeMap<SubjectId, Vec<usize>> {
        let mut map: BTreeMap<SubjectId, Vec<usize>> = BTreeMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            map.entry(inst.subject.clone()).or_default().push(i);
        }
        map
    }

    /// Subjects of each class, lexicographically sorted.
    pub fn subjects_by_class(&self) -> Vec<Vec<SubjectId>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (subject, label) in self.subject_labels() {
            out[label.0].push(subject);
        }
        out
    }

    /// Instance count per class over the given indices.
    pub fn class_counts<'a>(&self, idx: impl IntoIterator<Item = &'a usize>) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &i in idx {
            counts[self.instances[i].label.0] += 1;
        }
        counts
    }
}

pub type IndexSet = BTreeSet<usize>;

/// Disjoint train / pool / test index sets over a dataset.
///
/// `pool` is the candidate reservoir the active-learning loop scores each
/// iteration; instances only ever move from `pool` to `train`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub train: IndexSet,
    pub pool: IndexSet,
    pub test: IndexSet,
}

impl Partition {
    /// Check disjointness, full coverage of `dataset`, and test subject-closure.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let total = self.train.len() + self.pool.len() + self.test.len();
        let union: IndexSet = self
            .train
            .iter()
            .chain(&self.pool)
            .chain(&self.test)
            .copied()
            .collect();
        if union.len() != total {
            return Err(Error::InvalidInput("partition sets overlap".into()));
        }
        if union.len() != dataset.len() || union.iter().any(|&i| i >= dataset.len()) {
            return Err(Error::InvalidInput(
                "partition does not cover the dataset exactly".into(),
            ));
        }
        let test_subjects = self.subjects_of(dataset, &self.test);
        let rest = self.train.iter().chain(&self.pool);
        for &i in rest {
            if test_subjects.contains(&dataset.instance(i).subject) {
                return Err(Error::InvalidInput(format!(
                    "subject {} spans test and non-test sets",
                    dataset.instance(i).subject
                )));
            }
        }
        Ok(())
    }

    /// True when no subject has instances in both train and pool.
    pub fn train_pool_subject_closed(&self, dataset: &Dataset) -> bool {
        let train_subjects = self.subjects_of(dataset, &self.train);
        self.pool
            .iter()
            .all(|&i| !train_subjects.contains(&dataset.instance(i).subject))
    }

    pub fn subjects_of(&self, dataset: &Dataset, set: &IndexSet) -> BTreeSet<SubjectId> {
        set.iter()
            .map(|&i| dataset.instance(i).subject.clone())
            .collect()
    }

    /// Every index not in the test set.
    pub fn non_test(&self) -> IndexSet {
        self.train.union(&self.pool).copied().collect()
    }

    /// Move the given dataset indices from pool to train. Every index must be in the pool.
    pub fn transfer(&mut self, indices: &[usize]) -> Result<()> {
        if let Some(&bad) = indices.iter().find(|i| !self.pool.contains(i)) {
            return Err(Error::InvalidInput(format!(
                "index {bad} is not in the pool"
            )));
        }
        for i in indices {
            self.pool.remove(i);
            self.train.insert(*i);
        }
        Ok(())
    }
}

/// Hold out whole subjects per class for testing.
///
/// Each class contributes `max(1, round(test_fraction * n_c))` subjects to
/// the test set, chosen by a seeded shuffle of its lexicographically sorted
/// subjects. Everything else goes to the pool; train starts empty.
pub fn split_by_subject(dataset: &Dataset, test_fraction: f64, rng_seed: u64) -> Result<Partition> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let by_class = dataset.subjects_by_class();
    for (c, subjects) in by_class.iter().enumerate() {
        if subjects.len() < 3 {
            return Err(Error::Config(format!(
                "class {c} has {} subjects; at least 3 are required (2 for the seed, 1 for test)",
                subjects.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut test_subjects = BTreeSet::new();
    for subjects in &by_class {
        let n_test = test_subject_count(subjects.len(), test_fraction);
        let mut shuffled = subjects.clone();
        shuffled.shuffle(&mut rng);
        test_subjects.extend(shuffled.into_iter().take(n_test));
    }
    let mut partition = Partition::default();
    for (i, inst) in dataset.instances().iter().enumerate() {
        if test_subjects.contains(&inst.subject) {
            partition.test.insert(i);
        } else {
            partition.pool.insert(i);
        }
    }
    Ok(partition)
}

/// `max(1, round(fraction * n))`, capped so at least one subject remains outside the test set.
pub fn test_subject_count(n: usize, fraction: f64) -> usize {
    let k = ((fraction * n as f64).round() as usize).max(1);
    k.min(n.saturating_sub(1)).max(1)
}

/// Choose `subjects_per_class` random non-test subjects per class as the initial
/// training set; every other non-test instance becomes pool.
///
/// `subjects_per_class == 0` is rejected unless `allow_empty` is set.
pub fn select_balanced_seed(
    partition: &Partition,
    dataset: &Dataset,
    subjects_per_class: usize,
    rng_seed: u64,
    allow_empty: bool,
) -> Result<Partition> {
    if subjects_per_class == 0 && !allow_empty {
        return Err(Error::Config(
            "subjects_per_class = 0 yields an empty seed; pass allow_empty to permit it".into(),
        ));
    }
    let chosen = choose_subjects_per_class(partition, dataset, subjects_per_class, rng_seed)?;
    Ok(assign_subjects_to_train(partition, dataset, &chosen))
}

/// Seeded choice of `per_class` non-test subjects in every class.
pub(crate) fn choose_subjects_per_class(
    partition: &Partition,
    dataset: &Dataset,
    per_class: usize,
    rng_seed: u64,
) -> Result<BTreeSet<SubjectId>> {
    let non_test = partition.non_test();
    let mut available: Vec<BTreeSet<SubjectId>> = vec![BTreeSet::new(); dataset.num_classes()];
    for &i in &non_test {
        let inst = dataset.instance(i);
        available[inst.label.0].insert(inst.subject.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut chosen = BTreeSet::new();
    for (c, subjects) in available.iter().enumerate() {
        if subjects.len() < per_class {
            return Err(Error::Config(format!(
                "class {c} has {} non-test subjects, {per_class} requested",
                subjects.len()
            )));
        }
        let mut list: Vec<SubjectId> = subjects.iter().cloned().collect();
        list.shuffle(&mut rng);
        chosen.extend(list.into_iter().take(per_class));
    }
    Ok(chosen)
}

pub(crate) fn assign_subjects_to_train(
    partition: &Partition,
    dataset: &Dataset,
    chosen: &BTreeSet<SubjectId>,
) -> Partition {
    let mut out = Partition {
        train: IndexSet::new(),
        pool: IndexSet::new(),
        test: partition.test.clone(),
    };
    for i in partition.non_test() {
        if chosen.contains(&dataset.instance(i).subject) {
            out.train.insert(i);
        } else {
            out.pool.insert(i);
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::grouped;
    use super::*;

    fn test_subjects_per_class(ds: &Dataset, p: &Partition) -> Vec<usize> {
        let mut counts = vec![0; ds.num_classes()];
        for s in p.subjects_of(ds, &p.test) {
            counts[ds.subject_labels()[&s].0] += 1;
        }
        counts
    }

    #[test]
    fn one_test_subject_per_class_at_quarter_fraction() {
        let ds = grouped(&[3, 3, 3, 3], 5);
        let p = split_by_subject(&ds, 0.25, 1).unwrap();
        assert_eq!(test_subjects_per_class(&ds, &p), vec![1, 1, 1, 1]);
        assert!(p.train.is_empty());
        p.validate(&ds).unwrap();
    }

    #[test]
    fn split_is_deterministic() {
        let ds = grouped(&[5, 4, 6, 3], 4);
        assert_eq!(
            split_by_subject(&ds, 0.3, 99).unwrap(),
            split_by_subject(&ds, 0.3, 99).unwrap()
        );
    }

    #[test]
    fn test_counts_follow_rounded_fraction() {
        let ds = grouped(&[40, 4, 4, 10], 2);
        let p = split_by_subject(&ds, 0.2, 5).unwrap();
        assert_eq!(test_subjects_per_class(&ds, &p), vec![8, 1, 1, 2]);
    }

    #[test]
    fn too_few_subjects_names_the_class() {
        let ds = grouped(&[3, 2, 3], 2);
        match split_by_subject(&ds, 0.2, 0) {
            Err(Error::Config(msg)) => assert!(msg.contains("class 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn balanced_seed_takes_two_subjects_per_class() {
        let ds = grouped(&[6, 3, 3, 5], 20);
        let p = split_by_subject(&ds, 0.2, 3).unwrap();
        let seeded = select_balanced_seed(&p, &ds, 2, 4, false).unwrap();
        let train_subjects = seeded.subjects_of(&ds, &seeded.train);
        assert_eq!(train_subjects.len(), 8);
        assert_eq!(seeded.train.len(), 160);
        let mut per_class = vec![0; 4];
        for s in &train_subjects {
            per_class[ds.subject_labels()[s].0] += 1;
        }
        assert_eq!(per_class, vec![2, 2, 2, 2]);
        seeded.validate(&ds).unwrap();
        assert!(seeded.train_pool_subject_closed(&ds));
    }

    #[test]
    fn empty_seed_needs_explicit_flag() {
        let ds = grouped(&[3, 3], 2);
        let p = split_by_subject(&ds, 0.2, 0).unwrap();
        assert!(matches!(
            select_balanced_seed(&p, &ds, 0, 0, false),
            Err(Error::Config(_))
        ));
        let empty = select_balanced_seed(&p, &ds, 0, 0, true).unwrap();
        assert!(empty.train.is_empty());
        assert_eq!(empty.pool, p.non_test());
    }

    #[test]
    fn seed_rejects_insufficient_subjects() {
        let ds = grouped(&[5, 3], 2);
        let p = split_by_subject(&ds, 0.2, 0).unwrap();
        assert!(matches!(
            select_balanced_seed(&p, &ds, 3, 0, false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn conflicting_subject_labels_rejected() {
        let mk = |id, label| Instance {
            instance_id: id,
            subject: SubjectId::from("s1"),
            label: ClassLabel(label),
            features: vec![0.0],
        };
        let err = Dataset::new(vec![mk(0, 0), mk(1, 1)], 2, 1).unwrap_err();
        assert!(matches!(err, Error::ConflictingLabels { ref subject, .. } if subject == "s1"));
    }

    #[test]
    fn transfer_rejects_non_pool_indices() {
        let ds = grouped(&[3, 3], 2);
        let mut p = split_by_subject(&ds, 0.2, 0).unwrap();
        let t = *p.test.iter().next().unwrap();
        assert!(p.transfer(&[t]).is_err());
    }
}
