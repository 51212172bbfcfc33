// Re-targeting samples to a length-corrected distribution with normalized
// importance weights, and what that does to the effective sample size.

use mbr_core::{compute_weights, decode, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    // Sequence log-probabilities under the sampler: short outputs are favoured.
    let inst = Instance::new(
        "translate-7",
        vec![
            Candidate::new("the house").with_score(-2.0),
            Candidate::new("the house").with_score(-2.0),
            Candidate::new("the house is small").with_score(-5.5),
            Candidate::new("the house is very small").with_score(-7.0),
            Candidate::new("the small house").with_score(-4.0),
        ],
    );
    let spec = GainSpec::rouge(1);

    for w in [
        Weighting::Uniform,
        Weighting::Temperature { tau: 0.5 },
        Weighting::LengthNorm { beta: 1.0 },
        Weighting::LengthReward { gamma: 1.5 },
    ] {
        let wv = compute_weights(&inst, &w, &spec)?;
        let r = decode(&inst, &spec, &w, TieBreak::First)?;
        let total: f64 = wv.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        println!("{:<14} ess {:5.2}  -> {:?}", w.name(), wv.ess, r.selected_text);
    }

    let rewarded = decode(&inst, &spec, &Weighting::LengthReward { gamma: 1.5 }, TieBreak::First)?;
    assert!(rewarded.selected_text.split_whitespace().count() > 2);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
