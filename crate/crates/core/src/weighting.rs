//! Evidence weights for the risk estimate.
//!
//! Samples are assumed to come from the generator distribution p. Any other
//! target q is reached with self-normalized importance sampling: each sample
//! gets `log w~ = log q~(y) - log p(y)` (q~ unnormalized), and the weights are
//! divided by their sum. The estimator is consistent but biased at finite n;
//! the effective sample size is reported so callers can spot degenerate
//! weightings.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ngram::candidate_tokens;
use crate::types::{GainSpec, Instance, Weighting};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    /// Normalized, sums to 1.
    pub weights: Vec<f64>,
    /// `log w~` before normalization.
    pub log_unnormalized: Vec<f64>,
    /// `1 / sum w^2`.
    pub ess: f64,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector { weights: vec![1.0 / n as f64; n], log_unnormalized: vec![0.0; n], ess: n as f64 }
    }
}

/// Length-corrected score `s_l` in nats. `length` is the token count.
///
/// Only consulted by the length weightings; other kinds return `score`.
pub fn corrected_score(score: f64, length: usize, spec: &Weighting) -> Result<f64> {
    match spec {
        Weighting::LengthNorm { beta } => {
            if length == 0 {
                return Err(Error::ZeroLengthCandidate { index: 0 });
            }
            Ok(score / (length as f64).powf(*beta))
        }
        Weighting::LengthReward { gamma } => {
            if length == 0 {
                return Err(Error::ZeroLengthCandidate { index: 0 });
            }
            Ok(score + gamma * length as f64)
        }
        _ => Ok(score),
    }
}

pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let n = weights.len() as f64;
    if weights.windows(2).all(|w| w[0] == w[1]) {
        return n;
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    (1.0 / sq).clamp(1.0, n)
}

/// Max-subtracted softmax of log weights.
pub fn normalize_log_weights(log_w: Vec<f64>) -> Result<WeightVector> {
    if log_w.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::DegenerateWeights);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let unnorm: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    let weights: Vec<f64> = unnorm.iter().map(|v| v / total).collect();
    Ok(WeightVector { ess: effective_sample_size(&weights), weights, log_unnormalized: log_w })
}

/// Per-evidence weights realizing `spec`. The token counts used by the
/// length corrections come from `gain_spec`'s tokenizer.
pub fn compute_weights(inst: &Instance, spec: &Weighting, gain_spec: &GainSpec) -> Result<WeightVector> {
    spec.validate()?;
    let ev = &inst.evidence;
    if ev.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    let score = |i: usize| ev[i].score.ok_or(Error::MissingScore { index: i });

    let log_w = match spec {
        Weighting::Uniform => return Ok(WeightVector::uniform(ev.len())),
        Weighting::Temperature { tau } => {
            let k = 1.0 / tau - 1.0;
            (0..ev.len()).map(|i| Ok(score(i)? * k)).collect::<Result<Vec<_>>>()?
        }
        Weighting::LengthNorm { .. } | Weighting::LengthReward { .. } => (0..ev.len())
            .map(|i| {
                let s = score(i)?;
                let len = candidate_tokens(&ev[i], gain_spec).len();
                let sl = corrected_score(s, len, spec).map_err(|e| match e {
                    Error::ZeroLengthCandidate { .. } => Error::ZeroLengthCandidate { index: i },
                    e => e,
                })?;
                Ok(sl - s)
            })
            .collect::<Result<Vec<_>>>()?,
        Weighting::Mixture { weights } => {
            let mut per_model: BTreeMap<&str, usize> = BTreeMap::new();
            for (index, c) in ev.iter().enumerate() {
                let m = c.model_id.as_deref().ok_or(Error::MissingModelId { index, model_id: None })?;
                *per_model.entry(m).or_default() += 1;
            }
            // Missing pi falls back to uniform over the ids present.
            let pi = |m: &str| -> Option<f64> {
                if weights.is_empty() {
                    Some(1.0 / per_model.len() as f64)
                } else {
                    weights.get(m).map(|w| w / weights.values().sum::<f64>())
                }
            };
            ev.iter()
                .enumerate()
                .map(|(index, c)| {
                    let m = c.model_id.as_deref().unwrap_or_default();
                    let p = pi(m).ok_or_else(|| Error::MissingModelId { index, model_id: Some(m.to_owned()) })?;
                    Ok(p.ln() - (per_model[m] as f64).ln())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    normalize_log_weights(log_w)
}
