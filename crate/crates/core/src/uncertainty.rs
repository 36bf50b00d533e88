//! Per-instance uncertainty scores. Every method follows the same convention:
//! a higher value means the model is less sure of the instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::apply_temperature;
use crate::classifier::{predict_proba_with, softmax, Model, ProbabilityVector};
use crate::data::{ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Floor for the runner-up probability in the ratio score.
pub const RATIO_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LeastConfident,
    Margin,
    Ratio,
    Entropy,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::LeastConfident,
        Method::Entropy,
        Method::Margin,
        Method::Ratio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LeastConfident => "least-confident",
            Method::Margin => "margin",
            Method::Ratio => "ratio",
            Method::Entropy => "entropy",
        }
    }

    /// Row label used in result tables.
    pub fn title(self) -> &'static str {
        match self {
            Method::LeastConfident => "Least Confident",
            Method::Margin => "Margin",
            Method::Ratio => "Ratio",
            Method::Entropy => "Entropy",
        }
    }

    pub fn score(self, p: &ProbabilityVector) -> UncertaintyScore {
        let value = match self {
            Method::LeastConfident => least_confidence_value(p.probs()),
            Method::Margin => margin_value(p.probs()),
            Method::Ratio => ratio_value(p.probs()),
            Method::Entropy => entropy_value(p.probs()),
        };
        UncertaintyScore {
            value,
            method: self,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "least-confident" | "least-confidence" | "lc" => Ok(Method::LeastConfident),
            "margin" => Ok(Method::Margin),
            "ratio" => Ok(Method::Ratio),
            "entropy" => Ok(Method::Entropy),
            other => Err(Error::Config(format!("unknown uncertainty method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScore {
    pub value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance_id: u64,
    pub score: UncertaintyScore,
    pub predicted_label: ClassLabel,
    pub true_label: ClassLabel,
}

/// Largest and second-largest entries; ties resolve to the lower index first.
pub fn top_two(p: &[f64]) -> (f64, f64) {
    let mut first = 0;
    for i in 1..p.len() {
        if p[i] > p[first] {
            first = i;
        }
    }
    let mut second: Option<usize> = None;
    for i in 0..p.len() {
        if i == first {
            continue;
        }
        match second {
            Some(s) if p[i] <= p[s] => {}
            _ => second = Some(i),
        }
    }
    (p[first], second.map_or(0.0, |s| p[s]))
}

fn least_confidence_value(p: &[f64]) -> f64 {
    1.0 - top_two(p).0
}

fn margin_value(p: &[f64]) -> f64 {
    let (a, b) = top_two(p);
    1.0 - (a - b)
}

fn ratio_value(p: &[f64]) -> f64 {
    let (a, b) = top_two(p);
    -a / b.max(RATIO_EPSILON)
}

fn entropy_value(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

fn checked(p: &[f64]) -> Result<ProbabilityVector> {
    ProbabilityVector::new(p.to_vec())
}

/// `1 − max p`.
pub fn least_confidence(p: &[f64]) -> Result<UncertaintyScore> {
    Ok(Method::LeastConfident.score(&checked(p)?))
}

/// `1 − (p₍₁₎ − p₍₂₎)`.
pub fn margin(p: &[f64]) -> Result<UncertaintyScore> {
    Ok(Method::Margin.score(&checked(p)?))
}

/// `−p₍₁₎ / max(p₍₂₎, ε)`; always ≤ −1.
pub fn ratio(p: &[f64]) -> Result<UncertaintyScore> {
    Ok(Method::Ratio.score(&checked(p)?))
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<UncertaintyScore> {
    Ok(Method::Entropy.score(&checked(p)?))
}

/// Classify every pool index and score it, optionally after temperature scaling.
/// Output order follows `pool_idx`.
pub fn score_pool(
    model: &dyn Model,
    dataset: &Dataset,
    pool_idx: &[usize],
    method: Method,
    temperature: Option<f64>,
) -> Result<Vec<ScoredInstance>> {
    score_pool_with(model, dataset, pool_idx, method, temperature, Execution::default())
}

pub fn score_pool_with(
    model: &dyn Model,
    dataset: &Dataset,
    pool_idx: &[usize],
    method: Method,
    temperature: Option<f64>,
    exec: Execution,
) -> Result<Vec<ScoredInstance>> {
    if let Some(t) = temperature {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be > 0, got {t}"
            )));
        }
    }
    let predictions = predict_proba_with(model, dataset, pool_idx, exec)?;
    let rows: Vec<(usize, _)> = pool_idx.iter().copied().zip(predictions).collect();
    exec.try_map(&rows, |(i, pred)| {
        let probs = match temperature {
            Some(t) => apply_temperature(&pred.logits, t),
            None => softmax(&pred.logits),
        }
        .map_err(|e| Error::AtInstance {
            instance_id: pred.instance_id,
            source: Box::new(e),
        })?;
        Ok(ScoredInstance {
            instance_id: pred.instance_id,
            score: method.score(&probs),
            predicted_label: probs.argmax(),
            true_label: dataset.label(*i),
        })
    })
}
