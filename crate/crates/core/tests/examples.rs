#[allow(dead_code)]
mod batch_jsonl {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/batch_jsonl.rs"));
}

#[test]
fn batch_jsonl_runs() {
    batch_jsonl::run_example().expect("batch_jsonl example should run");
}

#[allow(dead_code)]
mod exact_oracle {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exact_oracle.rs"));
}

#[test]
fn exact_oracle_runs() {
    exact_oracle::run_example().expect("exact_oracle example should run");
}

#[allow(dead_code)]
mod external_gain {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/external_gain.rs"));
}

#[test]
fn external_gain_runs() {
    external_gain::run_example().expect("external_gain example should run");
}

#[allow(dead_code)]
mod length_correction {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/length_correction.rs"));
}

#[test]
fn length_correction_runs() {
    length_correction::run_example().expect("length_correction example should run");
}

#[allow(dead_code)]
mod mixture_ensemble {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mixture_ensemble.rs"));
}

#[test]
fn mixture_ensemble_runs() {
    mixture_ensemble::run_example().expect("mixture_ensemble example should run");
}

#[allow(dead_code)]
mod mode_seeking {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mode_seeking.rs"));
}

#[test]
fn mode_seeking_runs() {
    mode_seeking::run_example().expect("mode_seeking example should run");
}

#[allow(dead_code)]
mod plain_mbr {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/plain_mbr.rs"));
}

#[test]
fn plain_mbr_runs() {
    plain_mbr::run_example().expect("plain_mbr example should run");
}

#[allow(dead_code)]
mod range_voting {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/range_voting.rs"));
}

#[test]
fn range_voting_runs() {
    range_voting::run_example().expect("range_voting example should run");
}

#[allow(dead_code)]
mod self_consistency {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/self_consistency.rs"));
}

#[test]
fn self_consistency_runs() {
    self_consistency::run_example().expect("self_consistency example should run");
}
