//! Minimum Bayes risk (MBR) decoding over pre-sampled candidate sets.
//!
//! Given an evidence multiset `E` of sampled outputs and a hypothesis set
//! `H`, MBR picks
//!
//! ```text
//! argmax_{h in H}  sum_{e in E} w(e) * G(e, h)
//! ```
//!
//! for a pairwise gain `G` and evidence weights `w` that sum to one. The
//! choice of gain and weights covers several familiar selection schemes:
//!
//! | Scheme | Gain | Weights |
//! |--------|------|---------|
//! | plain sampling MBR | ROUGE-n / BLEU / external | uniform |
//! | mode seeking | exact match | uniform |
//! | self-consistency | answer match | uniform |
//! | range voting | any | uniform, tallied per voter |
//! | output ensembling | any | mixture over generators |
//! | length-corrected MBR | any | normalized importance weights |
//!
//! ```rust
//! use mbr_core::{decode, Candidate, GainSpec, Instance, TieBreak, Weighting};
//!
//! let inst = Instance::new("q1", vec![
//!     Candidate::new("the cat sat"),
//!     Candidate::new("the cat sat down"),
//!     Candidate::new("a dog barked"),
//! ]);
//! let r = decode(&inst, &GainSpec::rouge(1), &Weighting::Uniform, TieBreak::First).unwrap();
//! assert_eq!(r.selected_text, "the cat sat");
//! ```

pub mod cli;
pub mod decoder;
pub mod error;
pub mod io;
pub mod ngram;
pub mod oracle;
pub mod selfcheck;
pub mod types;
pub mod weighting;

pub use decoder::{
    decode, dedup_hypotheses, expected_gains, range_vote, select, self_consistency, MbrConfig, SelfConsistencyResult,
    TIE_TOLERANCE,
};
pub use error::{Error, Result};
pub use ngram::{
    gain, gain_answer_match, gain_exact_match, gain_matrix, gain_sentence_bleu, ngram_counts, rouge_kernel,
    rouge_kernel_l1, tokenize, GainMatrix, NgramCounts,
};
pub use types::{
    validate_instance, Candidate, DecodeResult, GainKind, GainSpec, Instance, TieBreak, Tokenizer, Weighting,
};
pub use weighting::{compute_weights, corrected_score, WeightVector};
