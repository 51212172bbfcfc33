// Batch decoding from JSONL in memory, the same path the `mbr` binary uses.

use mbr_core::io::{read_instances, write_results, ConfigEcho, ResultRecord};
use mbr_core::{GainSpec, MbrConfig, Weighting};

const INPUT: &str = r#"{"id":"q1","evidence":[{"text":"yes","score":-0.7},{"text":"yes","score":-0.7},{"text":"no","score":-0.9}]}
{"id":"q2","evidence":[{"text":"blue sky","score":-1.5},{"text":"a blue sky today","score":-4.0},{"text":"grey sky","score":-2.0}]}
"#;

pub fn run_example() -> mbr_core::Result<()> {
    let instances = read_instances(INPUT.as_bytes())?;
    let cfg = MbrConfig::new(GainSpec::rouge(1), Weighting::Temperature { tau: 2.0 });
    let results: Vec<_> = cfg.decode_batch(&instances).into_iter().collect::<mbr_core::Result<_>>()?;

    let mut out = Vec::new();
    write_results(&mut out, &results, &ConfigEcho::from(&cfg))?;
    let text = String::from_utf8(out).expect("utf-8 output");
    print!("{text}");

    let back: Vec<ResultRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back[0].selected_text, "yes");
    assert_eq!(back[1].config_echo.to_config()?, cfg);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
