//! Domain types shared by every stage of the decoder.
//!
//! A decoding problem is an [`Instance`]: an evidence multiset that stands in
//! for the output distribution, and a hypothesis set to choose from. How the
//! two are compared is a [`GainSpec`]; which distribution the evidence is
//! taken to represent is a [`Weighting`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sampled output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    /// Pre-segmented tokens. When present these win over `text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    /// Natural-log probability of the sequence under its generator (nats).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Extracted final answer, used by answer-match gain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

impl Candidate {
    pub fn new(text: impl Into<String>) -> Self {
        Candidate { text: text.into(), ..Default::default() }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_tokens<I, S>(mut self, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tokens = Some(tokens.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_answer(mut self, answer: impl Into<String>) -> Self {
        self.answer = Some(answer.into());
        self
    }

    pub fn with_model(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = Some(model_id.into());
        self
    }
}

/// One decoding problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub evidence: Vec<Candidate>,
    /// Defaults to the evidence set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Vec<Candidate>>,
    /// Row per evidence item, column per hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_gain: Option<Vec<Vec<f64>>>,
}

impl Instance {
    pub fn new(id: impl Into<String>, evidence: Vec<Candidate>) -> Self {
        Instance { id: id.into(), evidence, hypotheses: None, external_gain: None }
    }

    pub fn with_hypotheses(mut self, hypotheses: Vec<Candidate>) -> Self {
        self.hypotheses = Some(hypotheses);
        self
    }

    pub fn with_external_gain(mut self, matrix: Vec<Vec<f64>>) -> Self {
        self.external_gain = Some(matrix);
        self
    }

    /// The hypothesis set, falling back to the evidence set.
    pub fn hypotheses(&self) -> &[Candidate] {
        self.hypotheses.as_deref().unwrap_or(&self.evidence)
    }
}

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($name), " {:?}"), other
                    ))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainKind {
    /// Indicator on token sequences.
    ExactMatch,
    /// Indicator on the `answer` field.
    AnswerMatch,
    /// ROUGE-n in its count-vector kernel form.
    #[default]
    RougeN,
    /// Sentence BLEU with exponential smoothing and effective order.
    SentenceBleu,
    /// Precomputed `external_gain` matrix.
    External,
}

str_enum!(GainKind {
    ExactMatch => "exact",
    AnswerMatch => "answer",
    RougeN => "rouge",
    SentenceBleu => "bleu",
    External => "external",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tokenizer {
    /// Split on runs of Unicode whitespace.
    #[default]
    Whitespace,
    /// Unicode word boundaries, non-word runs dropped.
    UnicodeWord,
}

str_enum!(Tokenizer {
    Whitespace => "whitespace",
    UnicodeWord => "unicode-word",
});

/// Which pairwise gain G(y, y') to apply, and how text becomes tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSpec {
    pub kind: GainKind,
    /// n-gram order for ROUGE-n.
    pub n: usize,
    /// Highest n-gram order for BLEU.
    pub max_order: usize,
    pub lowercase: bool,
    pub tokenizer: Tokenizer,
}

impl Default for GainSpec {
    fn default() -> Self {
        GainSpec { kind: GainKind::RougeN, n: 1, max_order: 4, lowercase: true, tokenizer: Tokenizer::Whitespace }
    }
}

impl GainSpec {
    pub fn new(kind: GainKind) -> Self {
        GainSpec { kind, ..Default::default() }
    }

    pub fn exact_match() -> Self {
        Self::new(GainKind::ExactMatch)
    }

    pub fn answer_match() -> Self {
        Self::new(GainKind::AnswerMatch)
    }

    pub fn rouge(n: usize) -> Self {
        GainSpec { n, ..Self::new(GainKind::RougeN) }
    }

    pub fn bleu(max_order: usize) -> Self {
        GainSpec { max_order, ..Self::new(GainKind::SentenceBleu) }
    }

    pub fn external() -> Self {
        Self::new(GainKind::External)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n-gram order must be >= 1".into()));
        }
        if self.max_order == 0 {
            return Err(Error::InvalidConfig("BLEU max order must be >= 1".into()));
        }
        Ok(())
    }
}

/// The distribution the evidence is taken to represent.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Weighting {
    /// Plain Monte Carlo: every evidence item counts once.
    #[default]
    Uniform,
    /// Reweight samples of p towards p^(1/tau).
    Temperature { tau: f64 },
    /// Target p_l ∝ exp(s / T^beta).
    LengthNorm { beta: f64 },
    /// Target p_l ∝ exp(s + gamma T).
    LengthReward { gamma: f64 },
    /// Pooled samples from several generators, mixed with weights pi.
    /// An empty map means uniform over the model ids present.
    Mixture { weights: BTreeMap<String, f64> },
}

impl Weighting {
    pub fn name(&self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::Temperature { .. } => "temperature",
            Weighting::LengthNorm { .. } => "length-norm",
            Weighting::LengthReward { .. } => "length-reward",
            Weighting::Mixture { .. } => "mixture",
        }
    }

    pub fn needs_scores(&self) -> bool {
        matches!(self, Weighting::Temperature { .. } | Weighting::LengthNorm { .. } | Weighting::LengthReward { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self {
            Weighting::Uniform => Ok(()),
            Weighting::Temperature { tau } => {
                if tau.is_finite() && *tau > 0.0 {
                    Ok(())
                } else {
                    bad(format!("tau must be finite and > 0, got {tau}"))
                }
            }
            Weighting::LengthNorm { beta } if !beta.is_finite() => bad(format!("beta must be finite, got {beta}")),
            Weighting::LengthReward { gamma } if !gamma.is_finite() => {
                bad(format!("gamma must be finite, got {gamma}"))
            }
            Weighting::LengthNorm { .. } | Weighting::LengthReward { .. } => Ok(()),
            Weighting::Mixture { weights } => {
                if let Some((id, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
                    return bad(format!("mixture weight for {id:?} must be finite and >= 0, got {w}"));
                }
                if !weights.is_empty() && weights.values().sum::<f64>() <= 0.0 {
                    return bad("mixture weights must have a positive sum".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lowest index.
    #[default]
    First,
    /// Largest hypothesis score, then lowest index. Missing scores rank last.
    HighestScore,
    /// Most tokens, then lowest index.
    Longest,
}

str_enum!(TieBreak {
    First => "first",
    HighestScore => "highest-score",
    Longest => "longest",
});

/// Outcome of decoding one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub id: String,
    pub selected_index: usize,
    pub selected_text: String,
    /// Estimated expected gain of each hypothesis.
    pub gain_estimates: Vec<f64>,
    /// Normalized evidence weights.
    pub weights: Vec<f64>,
    /// Effective sample size of `weights`.
    pub ess: f64,
    pub tie_broken: bool,
}

/// Checks an instance against the gain and weighting it is about to be
/// decoded with, and fills in the default hypothesis set.
pub fn validate_instance(inst: &Instance, gain: &GainSpec, weighting: &Weighting) -> Result<Instance> {
    gain.validate()?;
    weighting.validate()?;

    if inst.evidence.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    let hypotheses = inst.hypotheses().to_vec();
    if hypotheses.is_empty() {
        return Err(Error::EmptyHypotheses);
    }

    for (set, cands) in [("evidence", &inst.evidence), ("hypotheses", &hypotheses)] {
        for (i, c) in cands.iter().enumerate() {
            if let Some(s) = c.score {
                if !s.is_finite() {
                    return Err(Error::NonFiniteValue(format!("score of {set} candidate {i}")));
                }
            }
        }
    }

    if let Some(m) = &inst.external_gain {
        let cols = m.first().map_or(0, Vec::len);
        let ragged = m.iter().any(|r| r.len() != cols);
        if ragged || m.len() != inst.evidence.len() || cols != hypotheses.len() {
            return Err(Error::MatrixShapeMismatch {
                rows: inst.evidence.len(),
                cols: hypotheses.len(),
                found_rows: m.len(),
                found_cols: if ragged { m.iter().map(Vec::len).max().unwrap_or(0) } else { cols },
            });
        }
        for (i, row) in m.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue(format!("external_gain[{i}][{j}]")));
            }
        }
    } else if gain.kind == GainKind::External {
        return Err(Error::MissingExternalGain);
    }

    if weighting.needs_scores() {
        if let Some(index) = inst.evidence.iter().position(|c| c.score.is_none()) {
            return Err(Error::MissingScore { index });
        }
    }
    if let Weighting::Mixture { weights } = weighting {
        for (index, c) in inst.evidence.iter().enumerate() {
            match &c.model_id {
                None => return Err(Error::MissingModelId { index, model_id: None }),
                Some(m) if !weights.is_empty() && !weights.contains_key(m) => {
                    return Err(Error::MissingModelId { index, model_id: Some(m.clone()) })
                }
                Some(_) => {}
            }
        }
    }

    Ok(Instance {
        id: inst.id.clone(),
        evidence: inst.evidence.clone(),
        hypotheses: Some(hypotheses),
        external_gain: inst.external_gain.clone(),
    })
}
