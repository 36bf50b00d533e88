//! Temperature scaling: divide logits by a scalar `T` before the softmax, with
//! `T` chosen to minimise negative log-likelihood on a fitting set.

use serde::{Deserialize, Serialize};

use crate::classifier::{softmax, softmax_unchecked, Logits, ProbabilityVector};
use crate::data::ClassLabel;
use crate::error::{Error, Result};

pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;
/// Absolute tolerance on the fitted temperature.
pub const T_TOLERANCE: f64 = 1e-4;
const GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub temperature: f64,
    /// NLL at `T = 1`.
    pub nll_before: f64,
    pub nll_after: f64,
    pub fit_set_size: usize,
}

/// `softmax(logits / T)`.
pub fn apply_temperature(logits: &Logits, temperature: f64) -> Result<ProbabilityVector> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let scaled: Vec<f64> = logits.values().iter().map(|v| v / temperature).collect();
    softmax(&Logits(scaled))
}

/// Mean NLL of temperature-scaled logits, computed as
/// `−(1/n) Σ [l_y/T − logsumexp(l/T)]` for numerical stability.
pub fn temperature_nll(pairs: &[(Logits, ClassLabel)], temperature: f64) -> f64 {
    let total: f64 = pairs
        .iter()
        .map(|(logits, y)| {
            let v = logits.values();
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / temperature;
            let lse = max
                + v.iter()
                    .map(|x| (x / temperature - max).exp())
                    .sum::<f64>()
                    .ln();
            lse - v[y.0] / temperature
        })
        .sum();
    total / pairs.len() as f64
}

/// Fit `T ∈ [T_MIN, T_MAX]` by golden-section search on `ln T`.
///
/// A 101-point log-spaced grid scan backs up the search: if some grid point
/// beats the golden-section optimum the search is repeated on that point's
/// neighbourhood. `T = 1` is kept whenever nothing beats it, so the fitted NLL
/// never exceeds the unscaled one.
pub fn fit_temperature(pairs: &[(Logits, ClassLabel)]) -> Result<CalibrationResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput(
            "temperature fitting needs at least one (logits, label) pair".into(),
        ));
    }
    for (logits, y) in pairs {
        if logits.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite logits".into()));
        }
        if y.0 >= logits.values().len() {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for {} logits",
                y.0,
                logits.values().len()
            )));
        }
    }
    let nll = |log_t: f64| temperature_nll(pairs, log_t.exp());
    let (lo, hi) = (T_MIN.ln(), T_MAX.ln());

    let mut best_log_t = golden_section(&nll, lo, hi);
    let mut best = nll(best_log_t);

    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let (grid_i, grid_val) = (0..GRID_POINTS)
        .map(|i| (i, nll(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if grid_val < best {
        let a = lo + step * grid_i.saturating_sub(1) as f64;
        let b = (lo + step * (grid_i + 1) as f64).min(hi);
        let refined = golden_section(&nll, a, b);
        let refined_val = nll(refined);
        if refined_val <= grid_val {
            best_log_t = refined;
            best = refined_val;
        } else {
            best_log_t = lo + step * grid_i as f64;
            best = grid_val;
        }
    }

    let nll_before = temperature_nll(pairs, 1.0);
    let (temperature, nll_after) = if best <= nll_before {
        (best_log_t.exp().clamp(T_MIN, T_MAX), best)
    } else {
        (1.0, nll_before)
    };
    Ok(CalibrationResult {
        temperature,
        nll_before,
        nll_after,
        fit_set_size: pairs.len(),
    })
}

/// Minimise a unimodal `f` on `[a, b]` (in log-temperature units) until the
/// bracket, mapped back to `T`, is narrower than [`T_TOLERANCE`].
pub fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b.exp() - a.exp() > T_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// True when scaling by `T` leaves the predicted class unchanged.
pub fn argmax_preserved(logits: &Logits, temperature: f64) -> bool {
    let scaled: Vec<f64> = logits.values().iter().map(|v| v / temperature).collect();
    let a = crate::classifier::argmax(&softmax_unchecked(logits.values()));
    let b = crate::classifier::argmax(&softmax_unchecked(&scaled));
    a == b
}
