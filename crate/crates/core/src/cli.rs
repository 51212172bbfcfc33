//! The `mbr` command line.
//!
//! ```text
//! mbr decode    --metric rouge --weighting length-norm --beta 1 --input in.jsonl
//! mbr matrix    --metric bleu --input in.jsonl > gains.jsonl
//! mbr fixtures  --seed 7 --output toy.jsonl      # also writes toy.expected.jsonl
//! mbr selfcheck
//! ```
//!
//! Exit codes: 0 success, 1 if any instance failed (the rest are still
//! processed), 2 on a configuration error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::decoder::MbrConfig;
use crate::error::{Error, Result};
use crate::io::{write_json_line, write_jsonl, ConfigEcho, InstanceReader, MatrixRecord, ResultRecord};
use crate::oracle::fixture_cases;
use crate::selfcheck::run_selfcheck;
use crate::types::{GainKind, GainSpec, Instance, TieBreak, Tokenizer, Weighting};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INSTANCE_ERROR: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mbr", version, about = "Minimum Bayes risk selection over pre-sampled candidates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select one hypothesis per instance.
    Decode(RunArgs),
    /// Emit each instance's gain matrix.
    Matrix(RunArgs),
    /// Write toy-distribution instances and their exact expectations.
    Fixtures(FixtureArgs),
    /// Run the built-in invariant checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Exact,
    Answer,
    Rouge,
    Bleu,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TokenizerArg {
    Whitespace,
    UnicodeWord,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    Temperature,
    LengthNorm,
    LengthReward,
    Mixture,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TieBreakArg {
    First,
    HighestScore,
    Longest,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "rouge")]
    metric: MetricArg,
    /// n-gram order for ROUGE.
    #[arg(long, default_value_t = 1)]
    ngram: usize,
    #[arg(long, default_value_t = 4)]
    bleu_order: usize,
    #[arg(long)]
    no_lowercase: bool,
    #[arg(long, value_enum, default_value = "whitespace")]
    tokenizer: TokenizerArg,
    #[arg(long, value_enum, default_value = "uniform")]
    weighting: WeightingArg,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Comma-separated `model_id=weight` pairs.
    #[arg(long)]
    mixture: Option<String>,
    #[arg(long, value_enum, default_value = "first")]
    tie_break: TieBreakArg,
    #[arg(long)]
    dedup_hypotheses: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Instance file; expectations go next to it as `<stem>.expected.jsonl`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
}

pub fn parse_mixture(spec: &str) -> Result<std::collections::BTreeMap<String, f64>> {
    spec.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (id, w) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("mixture entry {pair:?} is not id=weight")))?;
            let w: f64 =
                w.trim().parse().map_err(|_| Error::InvalidConfig(format!("mixture weight {w:?} is not a number")))?;
            Ok((id.trim().to_owned(), w))
        })
        .collect()
}

impl RunArgs {
    fn config(&self) -> Result<MbrConfig> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::InvalidConfig(format!("this weighting needs --{flag}")))
        };
        let weighting = match self.weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Temperature => Weighting::Temperature { tau: need(self.tau, "tau")? },
            WeightingArg::LengthNorm => Weighting::LengthNorm { beta: need(self.beta, "beta")? },
            WeightingArg::LengthReward => Weighting::LengthReward { gamma: need(self.gamma, "gamma")? },
            WeightingArg::Mixture => Weighting::Mixture {
                weights: self.mixture.as_deref().map(parse_mixture).transpose()?.unwrap_or_default(),
            },
        };
        let cfg = MbrConfig {
            gain: GainSpec {
                kind: match self.metric {
                    MetricArg::Exact => GainKind::ExactMatch,
                    MetricArg::Answer => GainKind::AnswerMatch,
                    MetricArg::Rouge => GainKind::RougeN,
                    MetricArg::Bleu => GainKind::SentenceBleu,
                    MetricArg::External => GainKind::External,
                },
                n: self.ngram,
                max_order: self.bleu_order,
                lowercase: !self.no_lowercase,
                tokenizer: match self.tokenizer {
                    TokenizerArg::Whitespace => Tokenizer::Whitespace,
                    TokenizerArg::UnicodeWord => Tokenizer::UnicodeWord,
                },
            },
            weighting,
            tie_break: match self.tie_break {
                TieBreakArg::First => TieBreak::First,
                TieBreakArg::HighestScore => TieBreak::HighestScore,
                TieBreakArg::Longest => TieBreak::Longest,
            },
            dedup_hypotheses: self.dedup_hypotheses,
        };
        cfg.validate()?;
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("--jobs must be >= 1".into()));
        }
        Ok(cfg)
    }
}

/// Runs the CLI against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = io::stdin();
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit streams. `--input`/`--output` paths override
/// `stdin`/`stdout`.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ =
                if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return if code == 0 { EXIT_OK } else { EXIT_CONFIG_ERROR };
        }
    };
    let outcome = match cli.command {
        Command::Decode(args) => run_batch(&args, Mode::Decode, stdin, stdout, stderr),
        Command::Matrix(args) => run_batch(&args, Mode::Matrix, stdin, stdout, stderr),
        Command::Fixtures(args) => run_fixtures(&args, stdout, stderr),
        Command::Selfcheck(args) => run_selfcheck_cmd(&args, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_config() {
                EXIT_CONFIG_ERROR
            } else {
                EXIT_INSTANCE_ERROR
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Decode,
    Matrix,
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidConfig(format!("cannot open {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidConfig(format!("cannot create {}: {e}", path.display())))
}

fn run_batch(
    args: &RunArgs,
    mode: Mode,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let cfg = args.config()?;
    let echo = ConfigEcho::from(&cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {} workers: {e}", args.jobs)))?;

    let items: Vec<Result<Instance>> = match &args.input {
        Some(path) => InstanceReader::new(open_input(path)?).collect(),
        None => InstanceReader::new(stdin).collect(),
    };
    let mut file_out;
    let out: &mut dyn Write = match &args.output {
        Some(path) => {
            file_out = create_output(path)?;
            &mut file_out
        }
        None => stdout,
    };

    // Each worker serializes its own line so output order is input order.
    let lines: Vec<Result<Vec<u8>>> = pool.install(|| {
        items
            .par_iter()
            .map(|item| {
                let inst = item.as_ref().map_err(clone_error)?;
                let mut buf = Vec::new();
                match mode {
                    Mode::Decode => {
                        let r = cfg.decode(inst)?;
                        write_json_line(&mut buf, &ResultRecord::new(&r, &echo))?;
                    }
                    Mode::Matrix => {
                        let m = cfg.matrix(inst)?;
                        write_json_line(&mut buf, &MatrixRecord::new(&inst.id, &m, &echo))?;
                    }
                }
                Ok(buf)
            })
            .collect()
    });

    let mut failed = 0usize;
    for line in lines {
        match line {
            Ok(bytes) => out.write_all(&bytes)?,
            Err(e) => {
                failed += 1;
                writeln!(stderr, "error: {e}")?;
            }
        }
    }
    out.flush()?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_INSTANCE_ERROR })
}

// Read errors are reported per line; only their message survives.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse { line: *line, message: message.clone() },
        Error::Schema { line, message } => Error::Schema { line: *line, message: message.clone() },
        other => Error::Io(io::Error::other(other.to_string())),
    }
}

/// `toy.jsonl` -> `toy.expected.jsonl`.
pub fn sidecar_path(instances: &Path) -> PathBuf {
    let stem = instances.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    instances.with_file_name(format!("{stem}.expected.jsonl"))
}

fn run_fixtures(args: &FixtureArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cases = fixture_cases(args.seed)?;
    let instances: Vec<_> = cases.iter().map(|c| c.instance.clone()).collect();
    let expected: Vec<_> = cases.iter().map(|c| c.expected.clone()).collect();
    match &args.output {
        Some(path) => {
            let mut out = create_output(path)?;
            write_jsonl(&mut out, &instances)?;
            out.flush()?;
            let mut side = create_output(&sidecar_path(path))?;
            write_jsonl(&mut side, &expected)?;
            side.flush()?;
        }
        None => {
            write_jsonl(stdout, &instances)?;
            writeln!(stderr, "note: no --output given, expectations not written")?;
        }
    }
    Ok(EXIT_OK)
}

fn run_selfcheck_cmd(args: &SelfcheckArgs, stdout: &mut dyn Write) -> Result<i32> {
    let mut ok = true;
    for c in run_selfcheck(args.seed, args.trials.max(1)) {
        ok &= c.passed;
        writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_INSTANCE_ERROR })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_flag() {
        let m = parse_mixture("m1=0.7, m2=0.3").unwrap();
        assert_eq!(m["m1"], 0.7);
        assert_eq!(m["m2"], 0.3);
        assert!(parse_mixture("m1").is_err());
        assert!(parse_mixture("m1=x").is_err());
        assert!(parse_mixture("").unwrap().is_empty());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(sidecar_path(Path::new("dir/toy.jsonl")), Path::new("dir/toy.expected.jsonl"));
    }
}
