//! The decision rule: weight the gain table by evidence, pick the argmax.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ngram::{candidate_tokens, gain, gain_matrix, GainMatrix};
use crate::types::{validate_instance, Candidate, DecodeResult, GainKind, GainSpec, Instance, TieBreak, Weighting};
use crate::weighting::{compute_weights, WeightVector};

/// Gains closer than this to the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `sum_i weights[i] * matrix[i][j]` for every column `j`.
pub fn expected_gains(matrix: &GainMatrix, weights: &[f64]) -> Result<Vec<f64>> {
    if matrix.rows() != weights.len() {
        return Err(Error::ShapeMismatch { rows: matrix.rows(), weights: weights.len() });
    }
    let mut out = vec![0.0; matrix.cols()];
    for (i, &w) in weights.iter().enumerate() {
        for (acc, &g) in out.iter_mut().zip(matrix.row(i)) {
            *acc += w * g;
        }
    }
    Ok(out)
}

/// Argmax of `gains` with deterministic tie handling. Returns the index and
/// whether more than one hypothesis was within [`TIE_TOLERANCE`] of the max.
///
/// `spec` supplies the tokenizer for [`TieBreak::Longest`].
pub fn select(gains: &[f64], hypotheses: &[Candidate], tie_break: TieBreak, spec: &GainSpec) -> Result<(usize, bool)> {
    if gains.is_empty() {
        return Err(Error::EmptyHypotheses);
    }
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..gains.len()).filter(|&j| gains[j] >= max - TIE_TOLERANCE).collect();
    let tie = tied.len() > 1;
    let pick = match tie_break {
        _ if !tie => tied[0],
        TieBreak::First => tied[0],
        TieBreak::HighestScore => {
            let score = |j: usize| hypotheses.get(j).and_then(|c| c.score).unwrap_or(f64::NEG_INFINITY);
            // max_by keeps the last of equal elements, so iterate in reverse
            *tied.iter().rev().max_by(|&&a, &&b| score(a).total_cmp(&score(b))).unwrap()
        }
        TieBreak::Longest => {
            let len = |j: usize| hypotheses.get(j).map_or(0, |c| candidate_tokens(c, spec).len());
            *tied.iter().rev().max_by_key(|&&j| len(j)).unwrap()
        }
    };
    Ok((pick, tie))
}

/// Drops later hypotheses whose token sequence repeats an earlier one,
/// along with their external-gain columns.
pub fn dedup_hypotheses(inst: &Instance, spec: &GainSpec) -> Instance {
    let hyps = inst.hypotheses();
    let mut seen = HashSet::new();
    let keep: Vec<usize> = (0..hyps.len()).filter(|&j| seen.insert(candidate_tokens(&hyps[j], spec))).collect();
    if keep.len() == hyps.len() {
        return inst.clone();
    }
    Instance {
        id: inst.id.clone(),
        evidence: inst.evidence.clone(),
        hypotheses: Some(keep.iter().map(|&j| hyps[j].clone()).collect()),
        external_gain: inst
            .external_gain
            .as_ref()
            .map(|m| m.iter().map(|row| keep.iter().map(|&j| row[j]).collect()).collect()),
    }
}

/// A complete decoding configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MbrConfig {
    pub gain: GainSpec,
    pub weighting: Weighting,
    pub tie_break: TieBreak,
    /// Merge hypotheses with identical token sequences before the argmax.
    pub dedup_hypotheses: bool,
}

impl MbrConfig {
    pub fn new(gain: GainSpec, weighting: Weighting) -> Self {
        MbrConfig { gain, weighting, ..Default::default() }
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_dedup(mut self, dedup: bool) -> Self {
        self.dedup_hypotheses = dedup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.gain.validate()?;
        self.weighting.validate()
    }

    fn prepared(&self, inst: &Instance) -> Result<Instance> {
        let v = validate_instance(inst, &self.gain, &self.weighting)?;
        Ok(if self.dedup_hypotheses { dedup_hypotheses(&v, &self.gain) } else { v })
    }

    /// Gain matrix for `inst`, after validation and optional dedup.
    pub fn matrix(&self, inst: &Instance) -> Result<GainMatrix> {
        let v = self.prepared(inst).map_err(|e| e.in_instance(&inst.id))?;
        gain_matrix(&v, &self.gain).map_err(|e| e.in_instance(&inst.id))
    }

    pub fn decode(&self, inst: &Instance) -> Result<DecodeResult> {
        self.decode_inner(inst).map_err(|e| e.in_instance(&inst.id))
    }

    fn decode_inner(&self, inst: &Instance) -> Result<DecodeResult> {
        let v = self.prepared(inst)?;
        let matrix = gain_matrix(&v, &self.gain)?;
        let weights = compute_weights(&v, &self.weighting, &self.gain)?;
        finish(&v, &self.gain, self.tie_break, &matrix, weights)
    }

    /// Decodes every instance on the current rayon pool. Output order
    /// follows input order.
    pub fn decode_batch(&self, instances: &[Instance]) -> Vec<Result<DecodeResult>> {
        instances.par_iter().map(|inst| self.decode(inst)).collect()
    }
}

fn finish(
    v: &Instance,
    spec: &GainSpec,
    tie_break: TieBreak,
    matrix: &GainMatrix,
    weights: WeightVector,
) -> Result<DecodeResult> {
    let gains = expected_gains(matrix, &weights.weights)?;
    let hyps = v.hypotheses();
    let (selected_index, tie_broken) = select(&gains, hyps, tie_break, spec)?;
    Ok(DecodeResult {
        id: v.id.clone(),
        selected_index,
        selected_text: hyps[selected_index].text.clone(),
        gain_estimates: gains,
        weights: weights.weights,
        ess: weights.ess,
        tie_broken,
    })
}

pub fn decode(
    inst: &Instance,
    gain_spec: &GainSpec,
    weighting: &Weighting,
    tie_break: TieBreak,
) -> Result<DecodeResult> {
    MbrConfig::new(gain_spec.clone(), weighting.clone()).with_tie_break(tie_break).decode(inst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistencyResult {
    pub result: DecodeResult,
    /// Trimmed answer of the selected hypothesis.
    pub answer: String,
    /// Evidence items carrying that answer.
    pub votes: usize,
}

/// Answer-match MBR under uniform weights, i.e. a majority vote over the
/// extracted answers.
pub fn self_consistency(inst: &Instance, tie_break: TieBreak) -> Result<SelfConsistencyResult> {
    let result = decode(inst, &GainSpec::answer_match(), &Weighting::Uniform, tie_break)?;
    let answer = inst.hypotheses()[result.selected_index].answer.as_deref().unwrap_or_default().trim().to_owned();
    let votes = inst.evidence.iter().filter(|c| c.answer.as_deref().map(str::trim) == Some(answer.as_str())).count();
    Ok(SelfConsistencyResult { result, answer, votes })
}

/// Range voting: each evidence item is a voter that scores every hypothesis
/// with G(voter, hypothesis); the highest average score wins.
///
/// Tallies with the scalar gain functions rather than the cached matrix, so
/// it can serve as an independent check on [`decode`] with uniform weights.
pub fn range_vote(inst: &Instance, gain_spec: &GainSpec, tie_break: TieBreak) -> Result<DecodeResult> {
    let v = validate_instance(inst, gain_spec, &Weighting::Uniform).map_err(|e| e.in_instance(&inst.id))?;
    let hyps = v.hypotheses();
    let voters = &v.evidence;
    let mut tally = vec![0.0; hyps.len()];
    for (i, voter) in voters.iter().enumerate() {
        for (j, cand) in hyps.iter().enumerate() {
            tally[j] += match gain_spec.kind {
                GainKind::External => v.external_gain.as_ref().ok_or(Error::MissingExternalGain)?[i][j],
                _ => gain(voter, cand, gain_spec).map_err(|e| e.at_cell(i, j).in_instance(&v.id))?,
            };
        }
    }
    let n = voters.len() as f64;
    let average: Vec<f64> = tally.iter().map(|t| t / n).collect();
    let (selected_index, tie_broken) = select(&average, hyps, tie_break, gain_spec)?;
    let uniform = WeightVector::uniform(voters.len());
    Ok(DecodeResult {
        id: v.id.clone(),
        selected_index,
        selected_text: hyps[selected_index].text.clone(),
        gain_estimates: average,
        weights: uniform.weights,
        ess: uniform.ess,
        tie_broken,
    })
}
