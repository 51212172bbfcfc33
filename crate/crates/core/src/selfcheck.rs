//! Built-in invariant checks behind `mbr selfcheck`.
//!
//! Quick randomized versions of the engine's core identities, cheap enough to
//! run on a deployed binary.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{decode, range_vote, self_consistency, MbrConfig};
use crate::ngram::{gain, gain_matrix, ngram_counts, rouge_kernel, rouge_kernel_l1};
use crate::oracle::{enumerate_space, exact_risk, ToyDistribution};
use crate::types::{Candidate, GainSpec, Instance, TieBreak, Weighting};
use crate::weighting::compute_weights;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_text(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

fn random_instance(rng: &mut ChaCha8Rng, scored: bool) -> Instance {
    let n = rng.gen_range(1..=8);
    let evidence = (0..n)
        .map(|_| {
            let mut c = Candidate::new(random_text(rng, 4, 5));
            if c.text.is_empty() {
                c.text = "w0".into();
            }
            if scored {
                c.score = Some(-rng.gen_range(0.0..20.0));
            }
            c
        })
        .collect();
    Instance::new("check", evidence)
}

fn outcome(name: &'static str, trials: usize, failures: Vec<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: failures.is_empty(),
        detail: match failures.first() {
            None => format!("{trials} trials"),
            Some(first) => format!("{} of {trials} failed; first: {first}", failures.len()),
        },
    }
}

pub fn run_selfcheck(seed: u64, trials: usize) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GainSpec::default();
    let mut out = Vec::new();

    let mut fails = Vec::new();
    for t in 0..trials {
        let n = 1 + t % 3;
        let a = spec_tokens(&random_text(&mut rng, 6, 12));
        let b = spec_tokens(&random_text(&mut rng, 6, 12));
        let (ca, cb) = (ngram_counts(&a, n), ngram_counts(&b, n));
        let (k, l1) = (rouge_kernel(&ca, &cb).unwrap(), rouge_kernel_l1(&ca, &cb).unwrap());
        if (k - l1).abs() > 1e-12 || k != rouge_kernel(&cb, &ca).unwrap() {
            fails.push(format!("{a:?} vs {b:?}: {k} vs {l1}"));
        }
    }
    out.push(outcome("kernel-identity", trials, fails));

    let mut fails = Vec::new();
    for _ in 0..trials {
        let inst = random_instance(&mut rng, false);
        let r = decode(&inst, &GainSpec::exact_match(), &Weighting::Uniform, TieBreak::First).unwrap();
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for c in &inst.evidence {
            *freq.entry(c.text.as_str()).or_default() += 1;
        }
        let top = freq.values().copied().max().unwrap_or(0);
        if freq[r.selected_text.as_str()] != top {
            fails.push(format!("selected {:?} is not modal", r.selected_text));
        }
    }
    out.push(outcome("mode-recovery", trials, fails));

    let mut fails = Vec::new();
    for _ in 0..trials {
        let n = rng.gen_range(1..=9);
        let answers: Vec<String> = (0..n).map(|_| rng.gen_range(0..4).to_string()).collect();
        let inst = Instance::new(
            "sc",
            answers.iter().map(|a| Candidate::new(format!("reasoning {a}")).with_answer(a.clone())).collect(),
        );
        let r = self_consistency(&inst, TieBreak::First).unwrap();
        let top = answers.iter().map(|a| answers.iter().filter(|b| *b == a).count()).max().unwrap();
        if r.votes != top {
            fails.push(format!("{answers:?}: got {} votes, max is {top}", r.votes));
        }
    }
    out.push(outcome("self-consistency-majority", trials, fails));

    let mut fails = Vec::new();
    let specs = [GainSpec::exact_match(), GainSpec::rouge(1), GainSpec::rouge(2), GainSpec::bleu(4)];
    for t in 0..trials {
        let mut inst = random_instance(&mut rng, false);
        let mut hyps = inst.evidence.clone();
        hyps.shuffle(&mut rng);
        hyps.truncate(rng.gen_range(1..=hyps.len()));
        inst.hypotheses = Some(hyps);
        let g = &specs[t % specs.len()];
        let a = range_vote(&inst, g, TieBreak::First).unwrap();
        let b = decode(&inst, g, &Weighting::Uniform, TieBreak::First).unwrap();
        if a.selected_index != b.selected_index {
            fails.push(format!("{:?}: range {} vs decode {}", g.kind, a.selected_index, b.selected_index));
        }
    }
    out.push(outcome("range-voting-equivalence", trials, fails));

    let mut fails = Vec::new();
    for _ in 0..trials {
        let inst = random_instance(&mut rng, true);
        let uniform = compute_weights(&inst, &Weighting::Uniform, &spec).unwrap();
        for w in [
            Weighting::LengthNorm { beta: 0.0 },
            Weighting::LengthReward { gamma: 0.0 },
            Weighting::Temperature { tau: 1.0 },
        ] {
            if compute_weights(&inst, &w, &spec).unwrap().weights != uniform.weights {
                fails.push(format!("{w:?} is not uniform"));
            }
        }
    }
    out.push(outcome("degenerate-weightings", trials, fails));

    let mut fails = Vec::new();
    for t in 0..trials.min(50) {
        let inst = random_instance(&mut rng, false);
        let g = &specs[t % specs.len()];
        let m = gain_matrix(&inst, g).unwrap();
        for (i, e) in inst.evidence.iter().enumerate() {
            for (j, h) in inst.hypotheses().iter().enumerate() {
                if m.get(i, j) != gain(e, h, g).unwrap() {
                    fails.push(format!("{:?} cell ({i},{j})", g.kind));
                }
            }
        }
        let cfg = MbrConfig::new(g.clone(), Weighting::Uniform);
        if cfg.matrix(&inst).unwrap() != m {
            fails.push("config matrix differs".into());
        }
    }
    out.push(outcome("matrix-matches-scalar", trials.min(50), fails));

    let mut fails = Vec::new();
    let vocab: Vec<String> = vec!["a".into(), "b".into()];
    for _ in 0..trials.min(20) {
        let d = ToyDistribution::random(vocab.clone(), 3, 2.0, &mut rng).unwrap();
        let space = enumerate_space(&d);
        let total: f64 = space.iter().map(|o| o.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            fails.push(format!("probabilities sum to {total}"));
        }
        for o in &space {
            let r = exact_risk(&d, &o.tokens, &GainSpec::exact_match()).unwrap();
            if (r - o.prob).abs() > 1e-12 {
                fails.push(format!("indicator risk of {:?} is {r}, p = {}", o.text(), o.prob));
            }
        }
    }
    out.push(outcome("oracle-indicator-risk", trials.min(20), fails));

    out
}

fn spec_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}
