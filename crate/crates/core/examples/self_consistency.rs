// Majority voting over extracted final answers of reasoning chains.

use mbr_core::{self_consistency, Candidate, Instance, TieBreak};

pub fn run_example() -> mbr_core::Result<()> {
    let chains = [
        ("12 apples minus 5 is 7, plus 3 gives 10", "10"),
        ("12 - 5 = 7; 7 + 3 = 10", "10"),
        ("12 + 3 = 15, minus 5 is 11", "11"),
        ("start with 12, give away 5, buy 3: 10", "10"),
        ("12 - 5 - 3 = 4", "4"),
    ];
    let inst =
        Instance::new("gsm-like", chains.iter().map(|(text, ans)| Candidate::new(*text).with_answer(*ans)).collect());
    let r = self_consistency(&inst, TieBreak::First)?;
    println!("answer {} with {} of {} votes", r.answer, r.votes, inst.evidence.len());
    println!("representative chain: {}", r.result.selected_text);
    assert_eq!((r.answer.as_str(), r.votes), ("10", 3));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
