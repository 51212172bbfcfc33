// Plain sampling-based MBR with ROUGE-2 and BLEU over a small candidate pool.

use mbr_core::{decode, Candidate, GainSpec, Instance, TieBreak, Weighting};

pub fn run_example() -> mbr_core::Result<()> {
    let inst = Instance::new(
        "summary-1",
        vec![
            Candidate::new("the council approved the new budget on monday"),
            Candidate::new("the council approved the budget on monday"),
            Candidate::new("on monday the council approved a new budget"),
            Candidate::new("budget talks stalled again"),
            Candidate::new("the council approved the new budget"),
        ],
    );

    for spec in [GainSpec::rouge(2), GainSpec::bleu(4)] {
        let r = decode(&inst, &spec, &Weighting::Uniform, TieBreak::First)?;
        println!("{}: picked #{} {:?}", spec.kind, r.selected_index, r.selected_text);
        for (h, g) in inst.evidence.iter().zip(&r.gain_estimates) {
            println!("  {g:.4}  {}", h.text);
        }
        assert_ne!(r.selected_text, "budget talks stalled again");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
