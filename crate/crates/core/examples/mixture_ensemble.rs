// Output ensembling: pool samples from two generators and weight each
// generator's share of the evidence.

use std::collections::BTreeMap;

use mbr_core::{compute_weights, decode, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    let mut evidence: Vec<Candidate> = ["a cat sits on the mat", "a cat sits on a mat", "the cat is on the mat"]
        .iter()
        .map(|t| Candidate::new(*t).with_model("small"))
        .collect();
    evidence.push(Candidate::new("a dog lies on the rug").with_model("large"));
    let inst = Instance::new("caption", evidence);
    let spec = GainSpec::rouge(1);

    // Equal trust in both generators: the single "large" sample carries half the mass.
    let even = Weighting::Mixture { weights: BTreeMap::from([("small".into(), 1.0), ("large".into(), 1.0)]) };
    let wv = compute_weights(&inst, &even, &spec)?;
    println!("weights {:?}", wv.weights);
    assert!((wv.weights[3] - 0.5).abs() < 1e-12);

    // Trusting only the large model collapses the evidence onto its sample.
    let large = Weighting::Mixture { weights: BTreeMap::from([("small".into(), 0.0), ("large".into(), 1.0)]) };
    let r = decode(&inst, &spec, &large, TieBreak::First)?;
    println!("large only -> {}", r.selected_text);
    assert_eq!(r.selected_index, 3);

    let pooled = decode(&inst, &spec, &Weighting::Uniform, TieBreak::First)?;
    println!("pooled     -> {}", pooled.selected_text);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
