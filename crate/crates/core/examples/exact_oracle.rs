// Small enough to enumerate: compare a sampled MBR decision with the exact
// one computed over every sequence of a toy distribution.

use mbr_core::oracle::{enumerate_space, exact_expected_gains, exact_mbr, sample, ToyDistribution};
use mbr_core::{decode, GainSpec, Instance, TieBreak, Weighting};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> mbr_core::Result<()> {
    let vocab: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dist = ToyDistribution::random(vocab, 3, 2.0, &mut rng)?;
    let space = enumerate_space(&dist);
    println!("{} sequences, total mass {:.12}", space.len(), space.iter().map(|o| o.prob).sum::<f64>());

    let spec = GainSpec::rouge(1);
    let all: Vec<Vec<String>> = dist.sequences().collect();
    let best = exact_mbr(&dist, &all, &spec)?;
    let exact = exact_expected_gains(&dist, &all, &spec)?;
    let best_gain = exact.iter().copied().fold(f64::MIN, f64::max);
    println!("exact MBR: {:?} (expected gain {best_gain:.4})", best.join(" "));

    let inst =
        Instance::new("toy", sample(&dist, 400, 11)).with_hypotheses(space.iter().map(|o| o.to_candidate()).collect());
    let r = decode(&inst, &spec, &Weighting::Uniform, TieBreak::First)?;
    let regret = best_gain - exact[r.selected_index];
    println!("sampled MBR (400 samples): {:?}, regret {regret:.5}", r.selected_text);
    assert!(regret < 0.02);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
