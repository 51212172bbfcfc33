// With an exact-match gain, MBR returns the most frequent sample.

use mbr_core::{decode, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    let samples = ["paris", "lyon", "paris", "marseille", "paris", "lyon"];
    let inst = Instance::new("capital", samples.iter().map(|s| Candidate::new(*s)).collect());
    let r = decode(&inst, &GainSpec::exact_match(), &Weighting::Uniform, TieBreak::First)?;
    println!("mode: {} (estimated frequency {:.3})", r.selected_text, r.gain_estimates[r.selected_index]);
    assert_eq!(r.selected_text, "paris");
    assert!((r.gain_estimates[r.selected_index] - 0.5).abs() < 1e-12);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
