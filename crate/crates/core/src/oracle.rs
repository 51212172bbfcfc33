//! Exact MBR over small, fully enumerable output spaces.
//!
//! A [`ToyDistribution`] puts a logit on every sequence of length
//! `1..=max_len` over a tiny vocabulary, so expectations over the whole
//! output space can be summed exactly. This is the reference the Monte Carlo
//! and importance-sampled estimators are checked against.
//!
//! Sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`) and one
//! uniform `f64` per draw, inverted through the cumulative distribution in
//! enumeration order. Golden fixtures depend on this exact procedure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::TIE_TOLERANCE;
use crate::error::{Error, Result};
use crate::ngram::gain;
use crate::types::{Candidate, GainSpec, Instance, Weighting};
use crate::weighting::corrected_score;

/// Largest output space the oracle will enumerate.
pub const MAX_SPACE: usize = 100_000;

/// Number of sequences of length `1..=max_len` over `vocab` symbols.
pub fn space_size(vocab: usize, max_len: usize) -> Option<usize> {
    let mut total = 0usize;
    let mut layer = 1usize;
    for _ in 0..max_len {
        layer = layer.checked_mul(vocab)?;
        total = total.checked_add(layer)?;
    }
    Some(total)
}

/// A distribution over complete sequences, `p(y) ∝ exp(logit(y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDistribution {
    vocab: Vec<String>,
    max_len: usize,
    /// One per sequence, in enumeration order: by length, then
    /// lexicographically by vocabulary index.
    logits: Vec<f64>,
    log_normalizer: f64,
}

impl ToyDistribution {
    /// Builds a distribution with `logit(y) = f(y)`.
    pub fn from_fn<F>(vocab: Vec<String>, max_len: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[String]) -> f64,
    {
        if vocab.is_empty() || max_len == 0 {
            return Err(Error::InvalidConfig("toy vocabulary and max_len must be nonempty".into()));
        }
        if vocab.iter().any(|s| s.is_empty() || s.chars().any(char::is_whitespace)) {
            return Err(Error::InvalidConfig("toy symbols must be nonempty and free of whitespace".into()));
        }
        let mut sorted = vocab.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != vocab.len() {
            return Err(Error::InvalidConfig("toy symbols must be distinct".into()));
        }
        let size = space_size(vocab.len(), max_len).unwrap_or(usize::MAX);
        if size > MAX_SPACE {
            return Err(Error::SpaceTooLarge { size, limit: MAX_SPACE });
        }

        let mut logits = Vec::with_capacity(size);
        for idx in SequenceIter::new(vocab.len(), max_len) {
            let seq: Vec<String> = idx.iter().map(|&k| vocab[k].clone()).collect();
            let l = f(&seq);
            if !l.is_finite() {
                return Err(Error::NonFiniteValue(format!("logit of {:?}", seq.join(" "))));
            }
            logits.push(l);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_normalizer = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        Ok(ToyDistribution { vocab, max_len, logits, log_normalizer })
    }

    /// Logits drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(vocab: Vec<String>, max_len: usize, scale: f64, rng: &mut R) -> Result<Self> {
        Self::from_fn(vocab, max_len, |_| rng.gen_range(-scale..=scale))
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    /// Sequences in enumeration order.
    pub fn sequences(&self) -> impl Iterator<Item = Vec<String>> + '_ {
        SequenceIter::new(self.vocab.len(), self.max_len)
            .map(move |idx| idx.iter().map(|&k| self.vocab[k].clone()).collect())
    }

    /// Exact `log p(y)`, or `None` if `seq` is outside the space.
    pub fn log_prob(&self, seq: &[String]) -> Option<f64> {
        if seq.is_empty() || seq.len() > self.max_len {
            return None;
        }
        let v = self.vocab.len();
        let mut offset = 0;
        let mut layer = 1;
        for _ in 1..seq.len() {
            layer *= v;
            offset += layer;
        }
        let mut rank = 0;
        for s in seq {
            rank = rank * v + self.vocab.iter().position(|x| x == s)?;
        }
        Some(self.logits[offset + rank] - self.log_normalizer)
    }

    /// The target distribution of a length-corrected weighting:
    /// `p_l(y) ∝ exp(s_l(y))` with `s = log p(y)` and `T = |y|`.
    pub fn length_corrected(&self, spec: &Weighting) -> Result<Self> {
        let base = self.clone();
        Self::from_fn(self.vocab.clone(), self.max_len, |seq| {
            let s = base.log_prob(seq).expect("sequence from own space");
            corrected_score(s, seq.len(), spec).expect("toy sequences are nonempty")
        })
    }
}

/// Odometer over index tuples of length `1..=max_len`.
struct SequenceIter {
    vocab: usize,
    max_len: usize,
    current: Vec<usize>,
    done: bool,
}

impl SequenceIter {
    fn new(vocab: usize, max_len: usize) -> Self {
        SequenceIter { vocab, max_len, current: vec![0], done: vocab == 0 || max_len == 0 }
    }
}

impl Iterator for SequenceIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut pos = self.current.len();
        loop {
            if pos == 0 {
                if self.current.len() == self.max_len {
                    self.done = true;
                } else {
                    self.current = vec![0; self.current.len() + 1];
                }
                break;
            }
            pos -= 1;
            self.current[pos] += 1;
            if self.current[pos] < self.vocab {
                break;
            }
            self.current[pos] = 0;
        }
        Some(out)
    }
}

/// One point of the output space.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tokens: Vec<String>,
    pub log_prob: f64,
    pub prob: f64,
}

impl Outcome {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn to_candidate(&self) -> Candidate {
        Candidate::new(self.text()).with_score(self.log_prob)
    }
}

pub fn enumerate_space(dist: &ToyDistribution) -> Vec<Outcome> {
    dist.sequences()
        .zip(&dist.logits)
        .map(|(tokens, l)| {
            let log_prob = l - dist.log_normalizer;
            Outcome { tokens, log_prob, prob: log_prob.exp() }
        })
        .collect()
}

fn as_candidate(tokens: &[String]) -> Candidate {
    Candidate::new(tokens.join(" "))
}

/// Exact expected gain `sum_y G(y, hyp) p(y)` over the whole space.
pub fn exact_risk(dist: &ToyDistribution, hypothesis: &[String], spec: &GainSpec) -> Result<f64> {
    Ok(exact_expected_gains(dist, &[hypothesis.to_vec()], spec)?[0])
}

/// [`exact_risk`] for several hypotheses, sharing one enumeration.
pub fn exact_expected_gains(dist: &ToyDistribution, hypotheses: &[Vec<String>], spec: &GainSpec) -> Result<Vec<f64>> {
    let space = enumerate_space(dist);
    let evidence: Vec<Candidate> = space.iter().map(|o| as_candidate(&o.tokens)).collect();
    hypotheses
        .iter()
        .map(|h| {
            let hc = as_candidate(h);
            space.iter().zip(&evidence).try_fold(0.0, |acc, (o, y)| Ok(acc + gain(y, &hc, spec)? * o.prob))
        })
        .collect()
}

/// The hypothesis with the highest exact expected gain. Ties go to the
/// lexicographically smallest token sequence.
pub fn exact_mbr(dist: &ToyDistribution, hypotheses: &[Vec<String>], spec: &GainSpec) -> Result<Vec<String>> {
    if hypotheses.is_empty() {
        return Err(Error::EmptyHypotheses);
    }
    let gains = exact_expected_gains(dist, hypotheses, spec)?;
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hypotheses
        .iter()
        .zip(&gains)
        .filter(|(_, &g)| g >= max - TIE_TOLERANCE)
        .map(|(h, _)| h)
        .min()
        .cloned()
        .expect("at least one hypothesis attains the max"))
}

/// `n` i.i.d. draws from `dist`, each scored with its exact log probability.
pub fn sample(dist: &ToyDistribution, n: usize, seed: u64) -> Vec<Candidate> {
    let space = enumerate_space(dist);
    let mut cdf = Vec::with_capacity(space.len());
    let mut acc = 0.0;
    for o in &space {
        acc += o.prob;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(space.len() - 1);
            space[k].to_candidate()
        })
        .collect()
}

/// Expected values recorded next to a generated fixture instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureExpectation {
    pub id: String,
    /// Exact ROUGE-1 MBR choice over the instance's hypotheses.
    pub exact_selection: String,
    /// Exact ROUGE-1 expected gain of each hypothesis.
    pub exact_gains: Vec<f64>,
    /// Most probable hypothesis (exact-match MBR).
    pub modal_hypothesis: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCase {
    pub instance: Instance,
    pub expected: FixtureExpectation,
}

pub const FIXTURE_CASES: usize = 4;
pub const FIXTURE_SAMPLES: usize = 16;

/// Small scored instances drawn from seeded toy distributions over
/// `{a, b, c}` with lengths up to 3.
///
/// Evidence alternates between model ids `m1` and `m2` and carries the last
/// token as its answer. Hypotheses are the distinct evidence sequences in
/// first-seen order.
pub fn fixture_cases(seed: u64) -> Result<Vec<FixtureCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let rouge1 = GainSpec::rouge(1);
    let exact = GainSpec::exact_match();
    (0..FIXTURE_CASES)
        .map(|k| {
            let dist = ToyDistribution::random(vocab.clone(), 3, 2.0, &mut rng)?;
            let draw_seed = rng.gen::<u64>();
            let evidence: Vec<Candidate> = sample(&dist, FIXTURE_SAMPLES, draw_seed)
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let last = c.text.rsplit(' ').next().unwrap_or_default().to_owned();
                    c.with_model(if i % 2 == 0 { "m1" } else { "m2" }).with_answer(last)
                })
                .collect();

            let mut hyp_tokens: Vec<Vec<String>> = Vec::new();
            let mut hypotheses = Vec::new();
            for c in &evidence {
                let toks: Vec<String> = c.text.split(' ').map(str::to_owned).collect();
                if !hyp_tokens.contains(&toks) {
                    hyp_tokens.push(toks);
                    hypotheses.push(Candidate { model_id: None, ..c.clone() });
                }
            }

            let id = format!("toy-{seed}-{k}");
            let exact_gains = exact_expected_gains(&dist, &hyp_tokens, &rouge1)?;
            let expected = FixtureExpectation {
                id: id.clone(),
                exact_selection: exact_mbr(&dist, &hyp_tokens, &rouge1)?.join(" "),
                exact_gains,
                modal_hypothesis: exact_mbr(&dist, &hyp_tokens, &exact)?.join(" "),
            };
            Ok(FixtureCase { instance: Instance::new(id, evidence).with_hypotheses(hypotheses), expected })
        })
        .collect()
}
