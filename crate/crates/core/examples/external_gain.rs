// Plugging in a precomputed gain matrix, e.g. from a learned metric.
// Rows are evidence, columns are hypotheses.

use mbr_core::{decode, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    let inst =
        Instance::new("scored-elsewhere", vec![Candidate::new("e0"), Candidate::new("e1"), Candidate::new("e2")])
            .with_hypotheses(vec![Candidate::new("h0"), Candidate::new("h1")])
            .with_external_gain(vec![vec![0.9, 0.2], vec![0.1, 0.7], vec![0.3, 0.8]]);

    let r = decode(&inst, &GainSpec::external(), &Weighting::Uniform, TieBreak::First)?;
    println!("expected gains {:?} -> {}", r.gain_estimates, r.selected_text);
    assert_eq!(r.selected_text, "h1");

    // A missing matrix is an error for this instance, not a panic.
    let bare = Instance::new("no-matrix", vec![Candidate::new("x")]);
    let err = decode(&bare, &GainSpec::external(), &Weighting::Uniform, TieBreak::First).unwrap_err();
    println!("without a matrix: {err}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
