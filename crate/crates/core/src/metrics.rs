//! Confusion matrix, accuracy, macro-F1 and negative log-likelihood.

use serde::{Deserialize, Serialize};

use crate::classifier::ProbabilityVector;
use crate::data::ClassLabel;
use crate::error::{Error, Result};

/// Probability floor inside the log of [`nll`].
pub const NLL_FLOOR: f64 = 1e-15;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    fn column_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

pub fn confusion(pairs: &[(ClassLabel, ClassLabel)], num_classes: usize) -> Result<ConfusionMatrix> {
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for &(t, p) in pairs {
        if t.0 >= num_classes || p.0 >= num_classes {
            return Err(Error::InvalidInput(format!(
                "label pair ({t}, {p}) out of range for {num_classes} classes"
            )));
        }
        counts[t.0][p.0] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidInput("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// How classes absent from both truth and prediction enter the macro average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsentClass {
    /// Contribute an F1 of 0.
    #[default]
    Zero,
    /// Leave them out of the mean.
    Skip,
}

/// Per-class F1, with `F1 := 0` when precision + recall is 0.
pub fn per_class_f1(cm: &ConfusionMatrix) -> Vec<f64> {
    (0..cm.num_classes())
        .map(|c| {
            let tp = cm.get(c, c) as f64;
            let predicted = cm.column_sum(c) as f64;
            let actual: f64 = cm.counts[c].iter().sum::<u64>() as f64;
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if actual > 0.0 { tp / actual } else { 0.0 };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    macro_f1_with(cm, AbsentClass::Zero)
}

pub fn macro_f1_with(cm: &ConfusionMatrix, absent: AbsentClass) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::InvalidInput("macro-F1 of an empty confusion matrix".into()));
    }
    let f1 = per_class_f1(cm);
    let included: Vec<f64> = f1
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| {
            absent == AbsentClass::Zero
                || cm.counts[c].iter().sum::<u64>() + cm.column_sum(c) > 0
        })
        .map(|(_, v)| v)
        .collect();
    Ok(included.iter().sum::<f64>() / included.len() as f64)
}

/// `−(1/n) Σ ln max(p[y], 1e-15)`.
pub fn nll(pairs: &[(ProbabilityVector, ClassLabel)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("NLL of an empty set".into()));
    }
    let mut total = 0.0;
    for (p, y) in pairs {
        let py = *p.probs().get(y.0).ok_or_else(|| {
            Error::InvalidInput(format!("label {y} out of range for {} classes", p.len()))
        })?;
        total -= py.max(NLL_FLOOR).ln();
    }
    Ok(total / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l(t: usize, p: usize) -> (ClassLabel, ClassLabel) {
        (ClassLabel(t), ClassLabel(p))
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[l(0, 0), l(1, 1), l(2, 2)], 3).unwrap();
        assert_eq!(cm.trace(), 3);
        assert_eq!(cm.total(), 3);
        assert_eq!(confusion(&[], 2).unwrap().total(), 0);
        let cm = confusion(&[l(0, 0), l(0, 1), l(1, 1)], 2).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 1], vec![0, 1]]);
        assert!(confusion(&[l(0, 2)], 2).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let cm = confusion(&[l(0, 0), l(0, 1), l(1, 1)], 2).unwrap();
        assert_abs_diff_eq!(accuracy(&cm).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let diag = confusion(&[l(0, 0), l(1, 1)], 2).unwrap();
        assert_eq!(accuracy(&diag).unwrap(), 1.0);
        assert!(accuracy(&confusion(&[], 2).unwrap()).is_err());
    }

    #[test]
    fn random_predictor_accuracy_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs: Vec<_> = (0..40_000)
            .map(|i| l(i % 4, rng.random_range(0..4)))
            .collect();
        let acc = accuracy(&confusion(&pairs, 4).unwrap()).unwrap();
        assert!((acc - 0.25).abs() < 0.01, "{acc}");
    }

    #[test]
    fn macro_f1_examples() {
        let cm = confusion(&[l(0, 0), l(1, 1), l(1, 1)], 2).unwrap();
        assert_eq!(macro_f1(&cm).unwrap(), 1.0);
        let cm = confusion(&[l(0, 0), l(0, 1), l(1, 1)], 2).unwrap();
        assert_abs_diff_eq!(macro_f1(&cm).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn collapsed_predictor_scores_quarter_of_one_class() {
        // Everything predicted as class 0 on 4-class data with counts 10,5,3,2.
        let counts = [10u64, 5, 3, 2];
        let rows = (0..4)
            .map(|t| {
                let mut r = vec![0; 4];
                r[0] = counts[t];
                r
            })
            .collect();
        let cm = ConfusionMatrix::from_counts(rows).unwrap();
        let f1_0 = 2.0 * (10.0 / 20.0) * 1.0 / (10.0 / 20.0 + 1.0);
        assert_abs_diff_eq!(macro_f1(&cm).unwrap(), 0.25 * f1_0, epsilon = 1e-12);
    }

    #[test]
    fn absent_classes_can_be_skipped() {
        let cm = confusion(&[l(0, 0), l(1, 1)], 3).unwrap();
        assert_abs_diff_eq!(macro_f1(&cm).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(macro_f1_with(&cm, AbsentClass::Skip).unwrap(), 1.0);
    }

    #[test]
    fn nll_examples() {
        let one_hot = ProbabilityVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(nll(&[(one_hot, ClassLabel(1))]).unwrap(), 0.0);
        let uniform = ProbabilityVector::new(vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(nll(&[(uniform, ClassLabel(2))]).unwrap(), 4f64.ln(), epsilon = 1e-12);
        let p = ProbabilityVector::new(vec![0.8, 0.2]).unwrap();
        assert_abs_diff_eq!(nll(&[(p, ClassLabel(0))]).unwrap(), 0.2231, epsilon = 1e-4);
        assert!(nll(&[]).is_err());
        let zero = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(nll(&[(zero, ClassLabel(1))]).unwrap(), -(1e-15f64).ln(), epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn macro_f1_invariant_under_relabelling(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
            perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let a: Vec<_> = pairs.iter().map(|&(t, p)| l(t, p)).collect();
            let b: Vec<_> = pairs.iter().map(|&(t, p)| l(perm[t], perm[p])).collect();
            let fa = macro_f1(&confusion(&a, 4).unwrap()).unwrap();
            let fb = macro_f1(&confusion(&b, 4).unwrap()).unwrap();
            prop_assert!((fa - fb).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&fa));
            let acc = accuracy(&confusion(&a, 4).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
        }
    }
}
