// Every sample votes a score for each hypothesis; the highest average wins.
// Under uniform weights this is the same choice MBR makes.

use mbr_core::{decode, range_vote, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    let voters = ["red green blue", "red green", "green blue", "red blue", "red green blue yellow"];
    let shortlist = ["red green", "green blue", "red green blue"];
    let inst = Instance::new("colours", voters.iter().map(|s| Candidate::new(*s)).collect())
        .with_hypotheses(shortlist.iter().map(|s| Candidate::new(*s)).collect());

    let spec = GainSpec::rouge(1);
    let votes = range_vote(&inst, &spec, TieBreak::First)?;
    let mbr = decode(&inst, &spec, &Weighting::Uniform, TieBreak::First)?;
    for (h, g) in shortlist.iter().zip(&votes.gain_estimates) {
        println!("{g:.4}  {h}");
    }
    println!("range vote: {}, mbr: {}", votes.selected_text, mbr.selected_text);
    assert_eq!(votes.selected_index, mbr.selected_index);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
