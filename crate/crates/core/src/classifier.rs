//! The model contract the active-learning loop trains and queries, plus a
//! small built-in feed-forward classifier over feature vectors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Raw per-class scores produced by a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn argmax(&self) -> ClassLabel {
        ClassLabel(argmax(&self.0))
    }
}

/// A categorical distribution: non-negative entries summing to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "probability vector needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(
                "probability vector has a negative or non-finite entry".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(ProbabilityVector(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class; ties go to the lower index.
    pub fn argmax(&self) -> ClassLabel {
        ClassLabel(argmax(&self.0))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax (max-shifted).
pub fn softmax(logits: &Logits) -> Result<ProbabilityVector> {
    let v = logits.values();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite logits".into()));
    }
    if v.len() < 2 {
        return Err(Error::InvalidInput("softmax needs at least 2 logits".into()));
    }
    Ok(ProbabilityVector(softmax_unchecked(v)))
}

pub(crate) fn softmax_unchecked(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Per-class loss weights; only their ratios matter.
    pub class_weights: Option<Vec<f64>>,
    pub rng_seed: u64,
    /// Per-class appearance count per epoch (≥ 1).
    pub oversample_multipliers: Option<Vec<usize>>,
    /// Width of the single hidden layer; 0 gives plain multinomial logistic regression.
    pub hidden_width: usize,
    /// Std of the Gaussian jitter added to duplicated (oversampled) copies.
    pub jitter_sigma: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
            class_weights: None,
            rng_seed: 0,
            oversample_multipliers: None,
            hidden_width: 32,
            jitter_sigma: 0.1,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be ≥ 1".into()));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::InvalidParameter("jitter_sigma must be ≥ 0".into()));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != num_classes {
                return Err(Error::InvalidParameter(format!(
                    "class_weights has length {}, expected {num_classes}",
                    w.len()
                )));
            }
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidParameter("class weights must be > 0".into()));
            }
        }
        if let Some(m) = &self.oversample_multipliers {
            if m.len() != num_classes {
                return Err(Error::InvalidParameter(format!(
                    "oversample_multipliers has length {}, expected {num_classes}",
                    m.len()
                )));
            }
            if m.contains(&0) {
                return Err(Error::InvalidParameter("multipliers must be ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// A trainable classifier the active-learning loop can drive.
///
/// Any external model (for instance a deep network over images, bridged in
/// through precomputed features) plugs into the loop through this trait.
pub trait Model: Send + Sync {
    fn fit(&mut self, dataset: &Dataset, train_idx: &[usize], settings: &TrainSettings) -> Result<()>;

    /// Logits for one feature vector. Fails with [`Error::NotFitted`] before `fit`.
    fn predict_logits(&self, features: &[f64]) -> Result<Logits>;

    fn is_fitted(&self) -> bool;
}

/// Builds a fresh, untrained model. The loop calls it once per training round.
pub type ModelFactory = dyn Fn(&Dataset) -> Box<dyn Model> + Send + Sync;

/// One prediction row: instance id, posterior, and the logits it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub instance_id: u64,
    pub probs: ProbabilityVector,
    pub logits: Logits,
}

/// Predict every index in `idx`, preserving order.
pub fn predict_proba(model: &dyn Model, dataset: &Dataset, idx: &[usize]) -> Result<Vec<Prediction>> {
    predict_proba_with(model, dataset, idx, Execution::default())
}

pub fn predict_proba_with(
    model: &dyn Model,
    dataset: &Dataset,
    idx: &[usize],
    exec: Execution,
) -> Result<Vec<Prediction>> {
    if !model.is_fitted() {
        return Err(Error::NotFitted);
    }
    exec.try_map(idx, |&i| {
        let inst = dataset.instance(i);
        let logits = model.predict_logits(&inst.features)?;
        let probs = softmax(&logits).map_err(|e| Error::AtInstance {
            instance_id: inst.instance_id,
            source: Box::new(e),
        })?;
        Ok(Prediction {
            instance_id: inst.instance_id,
            probs,
            logits,
        })
    })
}

/// `w_c = N / (C · n_c)` over the training indices.
pub fn inverse_frequency_weights(dataset: &Dataset, train_idx: &[usize]) -> Result<Vec<f64>> {
    let counts = dataset.class_counts(train_idx);
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Config(format!(
            "class {c} has no training instances; inverse-frequency weight undefined"
        )));
    }
    Ok(inverse_frequency_from_counts(&counts))
}

pub fn inverse_frequency_from_counts(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let c = counts.len() as f64;
    counts
        .iter()
        .map(|&nc| n as f64 / (c * nc as f64))
        .collect()
}

/// Shape of the feed-forward network: `input → [hidden (tanh)] → classes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Architecture {
    pub fn num_params(&self) -> usize {
        if self.hidden == 0 {
            self.classes * self.input + self.classes
        } else {
            self.hidden * self.input + self.hidden + self.classes * self.hidden + self.classes
        }
    }

    /// Logits for `x` under the flat parameter vector `params`.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.forward_with_hidden(params, x).0
    }

    fn forward_with_hidden(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, h, c) = (self.input, self.hidden, self.classes);
        if h == 0 {
            let (w, b) = params.split_at(c * d);
            let logits = (0..c).map(|k| b[k] + dot(&w[k * d..(k + 1) * d], x)).collect();
            return (logits, Vec::new());
        }
        let (w1, rest) = params.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(c * h);
        let hidden: Vec<f64> = (0..h)
            .map(|j| (b1[j] + dot(&w1[j * d..(j + 1) * d], x)).tanh())
            .collect();
        let logits = (0..c)
            .map(|k| b2[k] + dot(&w2[k * h..(k + 1) * h], &hidden))
            .collect();
        (logits, hidden)
    }

    /// Weighted cross-entropy `−Σ w_i log p_{y_i}(x_i) / Σ w_i` and its gradient.
    pub fn loss_and_gradient(
        &self,
        params: &[f64],
        xs: &[&[f64]],
        ys: &[usize],
        weights: &[f64],
    ) -> (f64, Vec<f64>) {
        let (d, h, c) = (self.input, self.hidden, self.classes);
        let mut grad = vec![0.0; params.len()];
        let total_w: f64 = weights.iter().sum();
        let mut loss = 0.0;
        for ((x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            let (logits, hidden) = self.forward_with_hidden(params, x);
            let p = softmax_unchecked(&logits);
            loss -= w * p[y].max(f64::MIN_POSITIVE).ln();
            let scale = w / total_w;
            // dL/dlogit_k = p_k − 1[k = y]
            let delta: Vec<f64> = (0..c)
                .map(|k| scale * (p[k] - if k == y { 1.0 } else { 0.0 }))
                .collect();
            if h == 0 {
                let (gw, gb) = grad.split_at_mut(c * d);
                for k in 0..c {
                    axpy(delta[k], x, &mut gw[k * d..(k + 1) * d]);
                    gb[k] += delta[k];
                }
                continue;
            }
            let w2 = &params[h * d + h..h * d + h + c * h];
            let (gw1, rest) = grad.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(c * h);
            let mut back = vec![0.0; h];
            for k in 0..c {
                axpy(delta[k], &hidden, &mut gw2[k * h..(k + 1) * h]);
                gb2[k] += delta[k];
                axpy(delta[k], &w2[k * h..(k + 1) * h], &mut back);
            }
            for j in 0..h {
                let dz = back[j] * (1.0 - hidden[j] * hidden[j]);
                axpy(dz, x, &mut gw1[j * d..(j + 1) * d]);
                gb1[j] += dz;
            }
        }
        (loss / total_w, grad)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let (d, h, c) = (self.input, self.hidden, self.classes);
        let mut glorot = |fan_in: usize, fan_out: usize, n: usize| -> Vec<f64> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-a..a)).collect()
        };
        let mut params = Vec::with_capacity(self.num_params());
        if h == 0 {
            params.extend(glorot(d, c, c * d));
            params.extend(std::iter::repeat_n(0.0, c));
        } else {
            params.extend(glorot(d, h, h * d));
            params.extend(std::iter::repeat_n(0.0, h));
            params.extend(glorot(h, c, c * h));
            params.extend(std::iter::repeat_n(0.0, c));
        }
        params
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Fitted {
    arch: Architecture,
    params: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

/// Feed-forward classifier trained by seeded mini-batch gradient descent on
/// weighted cross-entropy. Inputs are standardised with training-set
/// statistics before the first layer.
#[derive(Debug, Clone, Default)]
pub struct ReferenceClassifier {
    fitted: Option<Fitted>,
    loss_history: Vec<f64>,
}

impl ReferenceClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factory() -> Box<ModelFactory> {
        Box::new(|_: &Dataset| Box::new(ReferenceClassifier::new()) as Box<dyn Model>)
    }

    pub fn parameters(&self) -> Option<&[f64]> {
        self.fitted.as_ref().map(|f| f.params.as_slice())
    }

    /// Mean weighted training loss at the end of each epoch (on the un-jittered epoch list).
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }
}

impl Model for ReferenceClassifier {
    fn fit(&mut self, dataset: &Dataset, train_idx: &[usize], settings: &TrainSettings) -> Result<()> {
        let c = dataset.num_classes();
        settings.validate(c)?;
        if train_idx.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        if let Some(&bad) = train_idx.iter().find(|&&i| i >= dataset.len()) {
            return Err(Error::InvalidInput(format!("index {bad} out of range")));
        }
        let d = dataset.feature_dim();
        let (mean, scale) = standardisation(dataset, train_idx);
        let standardised: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| standardise(dataset.features(i), &mean, &scale))
            .collect();
        let labels: Vec<usize> = train_idx.iter().map(|&i| dataset.label(i).0).collect();

        // Normalising by the largest weight keeps uniformly scaled weight vectors bit-identical.
        let class_weight: Vec<f64> = match &settings.class_weights {
            Some(w) => {
                let max = w.iter().copied().fold(0.0, f64::max);
                w.iter().map(|x| x / max).collect()
            }
            None => vec![1.0; c],
        };

        // (position in train_idx, is a duplicated copy)
        let mut epoch_list: Vec<(usize, bool)> = Vec::new();
        for (pos, &y) in labels.iter().enumerate() {
            let copies = settings
                .oversample_multipliers
                .as_ref()
                .map_or(1, |m| m[y]);
            epoch_list.push((pos, false));
            epoch_list.extend(std::iter::repeat_n((pos, true), copies - 1));
        }

        let arch = Architecture {
            input: d,
            hidden: settings.hidden_width,
            classes: c,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed);
        let mut params = arch.init_params(&mut rng);
        let jitter = Normal::new(0.0, settings.jitter_sigma.max(0.0))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;

        self.loss_history.clear();
        let mut order = epoch_list.clone();
        let mut jittered: Vec<Vec<f64>> = Vec::new();
        for _ in 0..settings.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(settings.batch_size) {
                jittered.clear();
                // Jitter is in raw feature units, hence the division by the per-feature scale.
                for &(pos, dup) in batch {
                    if dup && settings.jitter_sigma > 0.0 {
                        let x: Vec<f64> = standardised[pos]
                            .iter()
                            .zip(&scale)
                            .map(|(v, sd)| v + jitter.sample(&mut rng) / sd)
                            .collect();
                        jittered.push(x);
                    }
                }
                let mut jit = jittered.iter();
                let xs: Vec<&[f64]> = batch
                    .iter()
                    .map(|&(pos, dup)| {
                        if dup && settings.jitter_sigma > 0.0 {
                            jit.next().expect("jitter row").as_slice()
                        } else {
                            standardised[pos].as_slice()
                        }
                    })
                    .collect();
                let ys: Vec<usize> = batch.iter().map(|&(pos, _)| labels[pos]).collect();
                let ws: Vec<f64> = ys.iter().map(|&y| class_weight[y]).collect();
                let (_, grad) = arch.loss_and_gradient(&params, &xs, &ys, &ws);
                axpy(-settings.learning_rate, &grad, &mut params);
            }
            let xs: Vec<&[f64]> = epoch_list
                .iter()
                .map(|&(pos, _)| standardised[pos].as_slice())
                .collect();
            let ys: Vec<usize> = epoch_list.iter().map(|&(pos, _)| labels[pos]).collect();
            let ws: Vec<f64> = ys.iter().map(|&y| class_weight[y]).collect();
            self.loss_history
                .push(weighted_loss(&arch, &params, &xs, &ys, &ws));
        }
        self.fitted = Some(Fitted {
            arch,
            params,
            mean,
            scale,
        });
        Ok(())
    }

    fn predict_logits(&self, features: &[f64]) -> Result<Logits> {
        let f = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        if features.len() != f.arch.input {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                f.arch.input,
                features.len()
            )));
        }
        let x = standardise(features, &f.mean, &f.scale);
        Ok(Logits(f.arch.forward(&f.params, &x)))
    }

    fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }
}

fn weighted_loss(arch: &Architecture, params: &[f64], xs: &[&[f64]], ys: &[usize], ws: &[f64]) -> f64 {
    let mut loss = 0.0;
    let mut total = 0.0;
    for ((x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let p = softmax_unchecked(&arch.forward(params, x));
        loss -= w * p[y].max(f64::MIN_POSITIVE).ln();
        total += w;
    }
    loss / total
}

fn standardisation(dataset: &Dataset, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = dataset.feature_dim();
    let n = idx.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in idx {
        axpy(1.0, dataset.features(i), &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for &i in idx {
        for (v, (x, m)) in var.iter_mut().zip(dataset.features(i).iter().zip(&mean)) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

fn standardise(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Instance, SubjectId};
    use approx::assert_abs_diff_eq;

    fn blobs(n_per_class: usize, sep: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut instances = Vec::new();
        for c in 0..2 {
            for j in 0..n_per_class {
                let centre = if c == 0 { -sep / 2.0 } else { sep / 2.0 };
                instances.push(Instance {
                    instance_id: (c * n_per_class + j) as u64,
                    subject: SubjectId(format!("s{c}_{j}")),
                    label: ClassLabel(c),
                    features: vec![centre + normal.sample(&mut rng), normal.sample(&mut rng)],
                });
            }
        }
        Dataset::new(instances, 2, 2).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&Logits(vec![0.0; 4])).unwrap();
        for &x in p.probs() {
            assert_abs_diff_eq!(x, 0.25, epsilon = 1e-15);
        }
        let p = softmax(&Logits(vec![2.0, 0.0])).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 0.8808, epsilon = 1e-4);
        assert_abs_diff_eq!(p.probs()[1], 0.1192, epsilon = 1e-4);
        let a = softmax(&Logits(vec![1.0, 2.0, 3.0])).unwrap();
        let b = softmax(&Logits(vec![101.0, 102.0, 103.0])).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn softmax_survives_extreme_logits() {
        let p = softmax(&Logits(vec![1e4, -1e4, 0.0])).unwrap();
        ProbabilityVector::new(p.probs().to_vec()).unwrap();
        assert_eq!(p.argmax(), ClassLabel(0));
        assert!(softmax(&Logits(vec![f64::NAN, 0.0])).is_err());
        assert!(softmax(&Logits(vec![f64::INFINITY, 0.0])).is_err());
    }

    #[test]
    fn inverse_frequency_examples() {
        assert_eq!(inverse_frequency_from_counts(&[5, 5, 5]), vec![1.0; 3]);
        let w = inverse_frequency_from_counts(&[90, 10]);
        assert_abs_diff_eq!(w[0], 100.0 / 180.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w[1], 5.0, epsilon = 1e-9);
        let w = inverse_frequency_from_counts(&[160 * 304, 5 * 304, 6 * 304, 29 * 304]);
        let base = w[0] * 160.0;
        for (wc, n) in w.iter().zip([160.0, 5.0, 6.0, 29.0]) {
            assert_abs_diff_eq!(wc * n, base, epsilon = 1e-9);
        }
    }

    #[test]
    fn inverse_frequency_needs_every_class() {
        let ds = blobs(5, 6.0, 0);
        let idx: Vec<usize> = (0..5).collect();
        match inverse_frequency_weights(&ds, &idx) {
            Err(Error::Config(msg)) => assert!(msg.contains("class 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let ds = blobs(100, 6.0, 11);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let mut model = ReferenceClassifier::new();
        let settings = TrainSettings {
            epochs: 50,
            ..TrainSettings::default()
        };
        model.fit(&ds, &idx, &settings).unwrap();
        let preds = predict_proba(&model, &ds, &idx).unwrap();
        let correct = preds
            .iter()
            .zip(&idx)
            .filter(|(p, &i)| p.probs.argmax() == ds.label(i))
            .count();
        assert!(correct as f64 / idx.len() as f64 >= 0.95);
    }

    #[test]
    fn uniform_weight_scale_does_not_change_training() {
        let ds = blobs(30, 2.0, 3);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let fit = |w: f64| {
            let mut m = ReferenceClassifier::new();
            let s = TrainSettings {
                class_weights: Some(vec![w, w]),
                epochs: 5,
                ..TrainSettings::default()
            };
            m.fit(&ds, &idx, &s).unwrap();
            m.parameters().unwrap().to_vec()
        };
        assert_eq!(fit(1.0), fit(5.0));
    }

    #[test]
    fn training_is_deterministic() {
        let ds = blobs(30, 2.0, 3);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let s = TrainSettings {
            oversample_multipliers: Some(vec![1, 3]),
            epochs: 4,
            rng_seed: 42,
            ..TrainSettings::default()
        };
        let mut a = ReferenceClassifier::new();
        let mut b = ReferenceClassifier::new();
        a.fit(&ds, &idx, &s).unwrap();
        b.fit(&ds, &idx, &s).unwrap();
        assert_eq!(a.parameters(), b.parameters());
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let ds = blobs(40, 1.5, 8);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let mut m = ReferenceClassifier::new();
        let s = TrainSettings {
            epochs: 60,
            batch_size: ds.len(),
            learning_rate: 0.01,
            hidden_width: 8,
            ..TrainSettings::default()
        };
        m.fit(&ds, &idx, &s).unwrap();
        for w in m.loss_history().windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fit_and_predict_errors() {
        let ds = blobs(5, 2.0, 0);
        let mut m = ReferenceClassifier::new();
        assert_eq!(m.predict_logits(&[0.0, 0.0]), Err(Error::NotFitted));
        assert!(matches!(
            predict_proba(&m, &ds, &[0]),
            Err(Error::NotFitted)
        ));
        assert!(m.fit(&ds, &[], &TrainSettings::default()).is_err());
        let bad = TrainSettings {
            class_weights: Some(vec![1.0; 3]),
            ..TrainSettings::default()
        };
        assert!(matches!(
            m.fit(&ds, &[0, 1], &bad),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn predict_proba_shapes() {
        let ds = blobs(10, 3.0, 1);
        let idx: Vec<usize> = (0..ds.len()).collect();
        let mut m = ReferenceClassifier::new();
        m.fit(&ds, &idx, &TrainSettings { epochs: 2, ..Default::default() })
            .unwrap();
        assert!(predict_proba(&m, &ds, &[]).unwrap().is_empty());
        assert_eq!(predict_proba(&m, &ds, &[3]).unwrap().len(), 1);
        let rows = predict_proba(&m, &ds, &[5, 2, 7]).unwrap();
        let ids: Vec<u64> = rows.iter().map(|r| r.instance_id).collect();
        assert_eq!(ids, vec![5, 2, 7]);
        for r in rows {
            assert_eq!(r.probs, softmax(&r.logits).unwrap());
        }
    }
}
