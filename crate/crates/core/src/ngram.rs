//! Tokenization, sparse n-gram counts, and the built-in gain functions.
//!
//! ROUGE-n is used in its kernel form over count vectors,
//!
//! ```text
//! K(y, y') = 1 - |T(y) - T(y')|_1 / (|T(y)|_1 + |T(y')|_1)
//!          = 2 * sum_g min(T(y)[g], T(y')[g]) / (|T(y)|_1 + |T(y')|_1)
//! ```
//!
//! where `T(y)` counts every n-gram of `y`. The second form only touches the
//! shared support and is what the matrix path evaluates.

use std::collections::HashMap;

use rayon::prelude::*;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};
use crate::types::{Candidate, GainKind, GainSpec, Instance, Tokenizer};

pub fn tokenize(text: &str, spec: &GainSpec) -> Vec<String> {
    let lowered;
    let text = if spec.lowercase {
        lowered = text.to_lowercase();
        &lowered
    } else {
        text
    };
    match spec.tokenizer {
        Tokenizer::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        Tokenizer::UnicodeWord => text.unicode_words().map(str::to_owned).collect(),
    }
}

/// Tokens of a candidate under `spec`. Supplied tokens are used as the
/// segmentation; casing still follows `spec.lowercase`.
pub fn candidate_tokens(c: &Candidate, spec: &GainSpec) -> Vec<String> {
    match &c.tokens {
        Some(toks) if spec.lowercase => toks.iter().map(|t| t.to_lowercase()).collect(),
        Some(toks) => toks.clone(),
        None => tokenize(&c.text, spec),
    }
}

/// Sparse count vector of the order-`n` n-grams of a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    order: usize,
    counts: HashMap<Vec<String>, u32>,
    total: u32,
}

impl NgramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Sum of all counts, i.e. `max(0, len - n + 1)`.
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn get(&self, gram: &[String]) -> u32 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], u32)> {
        self.counts.iter().map(|(g, &c)| (g.as_slice(), c))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// `sum_g min(self[g], other[g])`.
    fn overlap(&self, other: &NgramCounts) -> u32 {
        let (small, large) = if self.counts.len() <= other.counts.len() { (self, other) } else { (other, self) };
        small.counts.iter().map(|(g, &c)| c.min(large.get(g))).sum()
    }
}

/// # Panics
/// If `n == 0`.
pub fn ngram_counts(tokens: &[String], n: usize) -> NgramCounts {
    assert!(n >= 1, "n-gram order must be >= 1");
    let mut counts: HashMap<Vec<String>, u32> = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w.to_vec()).or_default() += 1;
    }
    NgramCounts { order: n, counts, total: tokens.len().saturating_sub(n - 1) as u32 }
}

fn kernel_from_overlap(overlap: u32, a: u32, b: u32) -> f64 {
    if a == 0 && b == 0 {
        return 1.0;
    }
    2.0 * f64::from(overlap) / (f64::from(a) + f64::from(b))
}

/// ROUGE-n kernel via the shared-support form.
pub fn rouge_kernel(a: &NgramCounts, b: &NgramCounts) -> Result<f64> {
    if a.order != b.order {
        return Err(Error::OrderMismatch { left: a.order, right: b.order });
    }
    Ok(kernel_from_overlap(a.overlap(b), a.total, b.total))
}

/// ROUGE-n kernel via the L1 distance of the count vectors.
pub fn rouge_kernel_l1(a: &NgramCounts, b: &NgramCounts) -> Result<f64> {
    if a.order != b.order {
        return Err(Error::OrderMismatch { left: a.order, right: b.order });
    }
    if a.total == 0 && b.total == 0 {
        return Ok(1.0);
    }
    let mut l1: u64 = 0;
    for (g, &ca) in &a.counts {
        l1 += u64::from(ca.abs_diff(b.get(g)));
    }
    for (g, &cb) in &b.counts {
        if !a.counts.contains_key(g) {
            l1 += u64::from(cb);
        }
    }
    Ok(1.0 - l1 as f64 / (f64::from(a.total) + f64::from(b.total)))
}

pub fn gain_exact_match(y: &Candidate, y2: &Candidate, spec: &GainSpec) -> f64 {
    if candidate_tokens(y, spec) == candidate_tokens(y2, spec) {
        1.0
    } else {
        0.0
    }
}

fn answer_key(c: &Candidate) -> Option<&str> {
    c.answer.as_deref().map(str::trim)
}

pub fn gain_answer_match(y: &Candidate, y2: &Candidate) -> Result<f64> {
    let a = answer_key(y).ok_or(Error::MissingAnswer { set: "evidence", index: 0 })?;
    let b = answer_key(y2).ok_or(Error::MissingAnswer { set: "hypotheses", index: 0 })?;
    Ok(if a == b { 1.0 } else { 0.0 })
}

/// Sentence BLEU from per-order statistics.
///
/// `matches[k]` and `totals[k]` are the clipped matches and hypothesis n-gram
/// count for order `k + 1`. Orders with zero matches are smoothed to
/// `1 / (2^j * total)` for the `j`-th such order; orders the hypothesis is
/// too short for are dropped from the geometric mean.
pub fn bleu_from_stats(matches: &[u32], totals: &[u32], hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 || matches.iter().all(|&m| m == 0) {
        return 0.0;
    }
    let mut smooth = 1.0_f64;
    let mut log_sum = 0.0_f64;
    let mut effective_order = 0usize;
    for (&m, &t) in matches.iter().zip(totals) {
        if t == 0 {
            break;
        }
        effective_order += 1;
        let p = if m == 0 {
            smooth *= 2.0;
            1.0 / (smooth * f64::from(t))
        } else {
            f64::from(m) / f64::from(t)
        };
        log_sum += p.ln();
    }
    let bp = if hyp_len < ref_len { (1.0 - ref_len as f64 / hyp_len as f64).exp() } else { 1.0 };
    bp * (log_sum / effective_order as f64).exp()
}

/// Sentence BLEU of `hypothesis` against the single reference `reference`.
/// Not symmetric.
pub fn gain_sentence_bleu(reference: &Candidate, hypothesis: &Candidate, spec: &GainSpec) -> f64 {
    let r = candidate_tokens(reference, spec);
    let h = candidate_tokens(hypothesis, spec);
    let mut matches = Vec::with_capacity(spec.max_order);
    let mut totals = Vec::with_capacity(spec.max_order);
    for n in 1..=spec.max_order {
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        matches.push(hc.overlap(&rc));
        totals.push(hc.total);
    }
    bleu_from_stats(&matches, &totals, h.len(), r.len())
}

/// Scalar G(y, y') for any built-in metric. `y` plays the evidence role.
pub fn gain(y: &Candidate, y2: &Candidate, spec: &GainSpec) -> Result<f64> {
    match spec.kind {
        GainKind::ExactMatch => Ok(gain_exact_match(y, y2, spec)),
        GainKind::AnswerMatch => gain_answer_match(y, y2),
        GainKind::RougeN => {
            let a = ngram_counts(&candidate_tokens(y, spec), spec.n);
            let b = ngram_counts(&candidate_tokens(y2, spec), spec.n);
            rouge_kernel(&a, &b)
        }
        GainKind::SentenceBleu => Ok(gain_sentence_bleu(y, y2, spec)),
        GainKind::External => {
            Err(Error::InvalidConfig("external gain has no pairwise form; read it from the instance".into()))
        }
    }
}

/// Dense row-major |evidence| x |hypotheses| matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        GainMatrix { rows, cols, data }
    }

    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend_from_slice(r);
        }
        GainMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GainMatrix {
        GainMatrix::new(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Sorted `(ngram id, count)` pairs plus their total.
#[derive(Debug, Default)]
struct SparseCounts {
    entries: Vec<(u32, u32)>,
    total: u32,
}

impl SparseCounts {
    fn overlap(&self, other: &SparseCounts) -> u32 {
        let (mut i, mut j, mut acc) = (0, 0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1.min(b[j].1);
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Default)]
struct Interner {
    tokens: HashMap<String, u32>,
    grams: HashMap<Vec<u32>, u32>,
}

impl Interner {
    fn token_ids(&mut self, tokens: Vec<String>) -> Vec<u32> {
        tokens
            .into_iter()
            .map(|t| {
                let next = self.tokens.len() as u32;
                *self.tokens.entry(t).or_insert(next)
            })
            .collect()
    }

    fn gram_id(&mut self, gram: &[u32]) -> u32 {
        if let Some(&id) = self.grams.get(gram) {
            return id;
        }
        let id = self.grams.len() as u32;
        self.grams.insert(gram.to_vec(), id);
        id
    }

    fn counts(&mut self, ids: &[u32], n: usize) -> SparseCounts {
        let mut map: HashMap<u32, u32> = HashMap::new();
        for w in ids.windows(n) {
            *map.entry(self.gram_id(w)).or_default() += 1;
        }
        let mut entries: Vec<_> = map.into_iter().collect();
        entries.sort_unstable();
        SparseCounts { entries, total: ids.len().saturating_sub(n - 1) as u32 }
    }
}

/// Per-candidate features, computed once per candidate.
enum Features {
    Sequence(u32),
    Answer(String),
    Rouge(SparseCounts),
    Bleu { len: usize, orders: Vec<SparseCounts> },
}

fn prepare(cands: &[Candidate], spec: &GainSpec, interner: &mut Interner) -> Vec<Features> {
    cands
        .iter()
        .map(|c| {
            let ids = interner.token_ids(candidate_tokens(c, spec));
            match spec.kind {
                GainKind::ExactMatch => {
                    // Whole-sequence id; the length tag keeps it apart from n-gram ids.
                    let mut key = ids;
                    key.push(u32::MAX - key.len() as u32);
                    Features::Sequence(interner.gram_id(&key))
                }
                GainKind::RougeN => Features::Rouge(interner.counts(&ids, spec.n)),
                GainKind::SentenceBleu => Features::Bleu {
                    len: ids.len(),
                    orders: (1..=spec.max_order).map(|n| interner.counts(&ids, n)).collect(),
                },
                GainKind::AnswerMatch | GainKind::External => unreachable!(),
            }
        })
        .collect()
}

fn cell(e: &Features, h: &Features) -> f64 {
    match (e, h) {
        (Features::Sequence(a), Features::Sequence(b)) => f64::from(u8::from(a == b)),
        (Features::Answer(a), Features::Answer(b)) => f64::from(u8::from(a == b)),
        (Features::Rouge(a), Features::Rouge(b)) => kernel_from_overlap(a.overlap(b), a.total, b.total),
        (Features::Bleu { len: ref_len, orders: r }, Features::Bleu { len: hyp_len, orders: hy }) => {
            let matches: Vec<u32> = hy.iter().zip(r).map(|(h, r)| h.overlap(r)).collect();
            let totals: Vec<u32> = hy.iter().map(|h| h.total).collect();
            bleu_from_stats(&matches, &totals, *hyp_len, *ref_len)
        }
        _ => unreachable!("evidence and hypothesis features share one kind"),
    }
}

/// Answer features, or the index of the first candidate without one.
fn answers(cands: &[Candidate]) -> std::result::Result<Vec<Features>, usize> {
    cands.iter().enumerate().map(|(i, c)| answer_key(c).map(|a| Features::Answer(a.to_owned())).ok_or(i)).collect()
}

/// The full pairwise table `G(evidence_i, hypothesis_j)`.
///
/// Candidates are tokenized and counted once each; rows are evaluated in
/// parallel on the current rayon pool. Every cell is computed independently,
/// so the result does not depend on the number of threads.
pub fn gain_matrix(inst: &Instance, spec: &GainSpec) -> Result<GainMatrix> {
    spec.validate()?;
    let evidence = &inst.evidence;
    let hypotheses = inst.hypotheses();

    let (ev, hy) = match spec.kind {
        GainKind::External => {
            let m = inst.external_gain.as_ref().ok_or(Error::MissingExternalGain)?;
            return Ok(GainMatrix::from_rows(m));
        }
        GainKind::AnswerMatch => {
            // Report the first failing cell in row-major order.
            if evidence.first().is_some_and(|c| answer_key(c).is_none()) {
                return Err(Error::MissingAnswer { set: "evidence", index: 0 }.at_cell(0, 0));
            }
            let hy =
                answers(hypotheses).map_err(|j| Error::MissingAnswer { set: "hypotheses", index: j }.at_cell(0, j))?;
            let ev = answers(evidence).map_err(|i| Error::MissingAnswer { set: "evidence", index: i }.at_cell(i, 0))?;
            (ev, hy)
        }
        _ => {
            let mut interner = Interner::default();
            let ev = prepare(evidence, spec, &mut interner);
            let hy = prepare(hypotheses, spec, &mut interner);
            (ev, hy)
        }
    };

    let cols = hy.len();
    let mut data = vec![0.0; ev.len() * cols];
    if cols > 0 {
        data.par_chunks_mut(cols).zip(ev.par_iter()).for_each(|(row, e)| {
            for (out, h) in row.iter_mut().zip(&hy) {
                *out = cell(e, h);
            }
        });
    }
    Ok(GainMatrix::new(ev.len(), cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, &GainSpec::default())
    }

    fn c(s: &str) -> Candidate {
        Candidate::new(s)
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(toks("The cat sat"), ["the", "cat", "sat"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("a  b\tc"), ["a", "b", "c"]);
        let uw = GainSpec { tokenizer: Tokenizer::UnicodeWord, ..Default::default() };
        assert_eq!(tokenize("Hello, world! It's 3.5", &uw), ["hello", "world", "it's", "3.5"]);
        let cased = GainSpec { lowercase: false, ..Default::default() };
        assert_eq!(tokenize("The Cat", &cased), ["The", "Cat"]);
    }

    #[test]
    fn supplied_tokens_win() {
        let cand = Candidate::new("ignored text").with_tokens(["A", "b"]);
        assert_eq!(candidate_tokens(&cand, &GainSpec::default()), ["a", "b"]);
    }

    #[test]
    fn count_examples() {
        let u = ngram_counts(&toks("the cat sat"), 1);
        assert_eq!(u.total(), 3);
        assert_eq!(u.distinct(), 3);
        assert_eq!(u.get(&["cat".to_string()]), 1);

        let aa = ngram_counts(&toks("a a a"), 2);
        assert_eq!(aa.total(), 2);
        assert_eq!(aa.distinct(), 1);
        assert_eq!(aa.get(&["a".to_string(), "a".to_string()]), 2);

        let short = ngram_counts(&toks("a"), 2);
        assert_eq!(short.total(), 0);
        assert_eq!(short.distinct(), 0);
    }

    #[test]
    fn kernel_examples() {
        let a = ngram_counts(&toks("the cat sat"), 1);
        assert_eq!(rouge_kernel(&a, &a).unwrap(), 1.0);
        let ab = ngram_counts(&toks("a b"), 1);
        let cd = ngram_counts(&toks("c d"), 1);
        assert_eq!(rouge_kernel(&ab, &cd).unwrap(), 0.0);
        // overlap 2, totals 3 + 2
        let b = ngram_counts(&toks("the cat"), 1);
        assert!((rouge_kernel(&a, &b).unwrap() - 0.8).abs() < 1e-15);
        assert!((rouge_kernel_l1(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn kernel_empty_cases() {
        let e = ngram_counts(&[], 2);
        let x = ngram_counts(&toks("x y"), 2);
        assert_eq!(rouge_kernel(&e, &e).unwrap(), 1.0);
        assert_eq!(rouge_kernel(&e, &x).unwrap(), 0.0);
        assert_eq!(rouge_kernel_l1(&e, &e).unwrap(), 1.0);
        assert_eq!(rouge_kernel_l1(&x, &e).unwrap(), 0.0);
    }

    #[test]
    fn kernel_order_mismatch() {
        let a = ngram_counts(&toks("a b"), 1);
        let b = ngram_counts(&toks("a b"), 2);
        assert!(matches!(rouge_kernel(&a, &b), Err(Error::OrderMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn match_gains() {
        let g = GainSpec::exact_match();
        assert_eq!(gain_exact_match(&c("a b"), &c("a  b"), &g), 1.0);
        assert_eq!(gain_exact_match(&c("a"), &c("b"), &g), 0.0);
        assert_eq!(gain_exact_match(&c("A"), &c("a"), &g), 1.0);

        let four = c("x").with_answer("4");
        assert_eq!(gain_answer_match(&four, &c("y").with_answer(" 4\n")).unwrap(), 1.0);
        assert_eq!(gain_answer_match(&four, &c("y").with_answer("7")).unwrap(), 0.0);
        assert!(matches!(gain_answer_match(&four, &c("y")), Err(Error::MissingAnswer { .. })));
    }

    // Reference values from sacrebleu 2.x sentence BLEU with
    // tokenize=none, smooth_method=exp, effective_order=True.
    #[test]
    fn bleu_golden_values() {
        let g = GainSpec::bleu(4);
        let cases = [
            ("the cat sat on the mat", "the cat sat", 0.3678794411714425),
            ("the cat sat on the mat", "the cat sat on a mat", 0.537284965911771),
            ("the cat sat", "the cat sat on the mat", 0.30213753973567675),
            ("a b c d e f", "a x c y e z", 0.10682175159905853),
            ("a b", "b a", 0.7071067811865478),
            ("the quick brown fox jumps", "the quick red fox jumps over", 0.22957488466614337),
        ];
        for (r, h, want) in cases {
            let got = gain_sentence_bleu(&c(r), &c(h), &g);
            assert!((got - want).abs() < 1e-12, "{r:?} / {h:?}: {got} vs {want}");
        }
    }

    #[test]
    fn bleu_edge_cases() {
        let g = GainSpec::bleu(4);
        assert_eq!(gain_sentence_bleu(&c("the cat sat on the mat"), &c("the cat sat on the mat"), &g), 1.0);
        assert_eq!(gain_sentence_bleu(&c("the cat"), &c(""), &g), 0.0);
        assert_eq!(gain_sentence_bleu(&c("a b"), &c("c d"), &g), 0.0);
    }

    #[test]
    fn bleu_is_not_symmetric() {
        let g = GainSpec::bleu(4);
        let (a, b) = (c("the cat sat on the mat"), c("the cat sat"));
        assert!((gain_sentence_bleu(&a, &b, &g) - gain_sentence_bleu(&b, &a, &g)).abs() > 0.05);
    }

    #[test]
    fn matrix_examples() {
        let inst = Instance::new("m", vec![c("a"), c("b")]);
        let m = gain_matrix(&inst, &GainSpec::exact_match()).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let ext = vec![vec![0.1, 0.2], vec![0.3, 0.4]];
        let inst = inst.with_external_gain(ext.clone());
        assert_eq!(gain_matrix(&inst, &GainSpec::external()).unwrap().to_rows(), ext);

        let inst = Instance::new("r", vec![c("the cat sat")]).with_hypotheses(vec![c("the cat")]);
        let m = gain_matrix(&inst, &GainSpec::rouge(1)).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert!((m.get(0, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn matrix_missing_answer_has_cell_context() {
        let inst = Instance::new("a", vec![c("x").with_answer("1"), c("y").with_answer("2"), c("z")]);
        let err = gain_matrix(&inst, &GainSpec::answer_match()).unwrap_err();
        // hypotheses default to evidence, so column 2 fails first in row 0
        assert!(matches!(err, Error::AtCell { row: 0, col: 2, .. }), "{err}");
    }

    #[test]
    fn matrix_matches_scalar_gains() {
        let texts = ["the cat sat", "the cat sat on the mat", "a dog", "", "the the cat", "mat on the cat"];
        let ev: Vec<_> = texts.iter().map(|t| c(t)).collect();
        let hy: Vec<_> = texts.iter().rev().map(|t| c(t)).collect();
        let inst = Instance::new("s", ev.clone()).with_hypotheses(hy.clone());
        for spec in
            [GainSpec::exact_match(), GainSpec::rouge(1), GainSpec::rouge(2), GainSpec::bleu(4), GainSpec::bleu(2)]
        {
            let m = gain_matrix(&inst, &spec).unwrap();
            for (i, e) in ev.iter().enumerate() {
                for (j, h) in hy.iter().enumerate() {
                    assert_eq!(m.get(i, j), gain(e, h, &spec).unwrap(), "{:?} ({i},{j})", spec.kind);
                }
            }
        }
    }
}
