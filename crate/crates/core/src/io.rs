//! JSONL instance and result formats.
//!
//! Input is one [`Instance`] per line. Output is one [`ResultRecord`] per
//! line, with every float written as `%.17g` (17 significant digits, trailing
//! zeros dropped) so values round-trip exactly and byte-compare stably.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::decoder::MbrConfig;
use crate::error::{Error, Result};
use crate::ngram::GainMatrix;
use crate::types::{DecodeResult, GainKind, GainSpec, Instance, TieBreak, Weighting};

/// C-style `%.17g`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let prec = (16 - exp) as usize;
        trim_fraction(&format!("{v:.prec$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct G17Formatter;

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as one JSON line with `%.17g` floats.
pub fn write_json_line<T: Serialize, W: Write + ?Sized>(out: &mut W, value: &T) -> io::Result<()> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    buf.push(b'\n');
    out.write_all(&buf)
}

pub fn write_jsonl<'a, T, I, W>(out: &mut W, items: I) -> io::Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
    W: Write + ?Sized,
{
    for item in items {
        write_json_line(out, item)?;
    }
    Ok(())
}

/// Streams instances from JSONL, one result per nonblank line.
/// Line numbers in errors are 1-based.
pub struct InstanceReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> InstanceReader<R> {
    pub fn new(reader: R) -> Self {
        InstanceReader { lines: reader.lines(), line: 0 }
    }
}

pub fn parse_instance_line(text: &str, line: usize) -> Result<Instance> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse { line, message: e.to_string() })?;
    serde_json::from_value(value).map_err(|e| Error::Schema { line, message: e.to_string() })
}

impl<R: BufRead> Iterator for InstanceReader<R> {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_instance_line(&text, self.line));
        }
    }
}

/// Reads every instance, failing on the first bad line.
pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<Instance>> {
    InstanceReader::new(reader).collect()
}

pub fn write_instances<W: Write + ?Sized>(out: &mut W, instances: &[Instance]) -> io::Result<()> {
    write_jsonl(out, instances)
}

/// Everything needed to rerun a decode with identical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub metric: String,
    pub ngram: usize,
    pub bleu_order: usize,
    pub lowercase: bool,
    pub tokenizer: String,
    pub weighting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<BTreeMap<String, f64>>,
    pub tie_break: String,
    pub dedup_hypotheses: bool,
    /// Unit of the sequence length used by length corrections.
    pub length_unit: String,
}

impl From<&MbrConfig> for ConfigEcho {
    fn from(cfg: &MbrConfig) -> Self {
        let (mut tau, mut beta, mut gamma, mut mixture) = (None, None, None, None);
        match &cfg.weighting {
            Weighting::Uniform => {}
            Weighting::Temperature { tau: t } => tau = Some(*t),
            Weighting::LengthNorm { beta: b } => beta = Some(*b),
            Weighting::LengthReward { gamma: g } => gamma = Some(*g),
            Weighting::Mixture { weights } => mixture = Some(weights.clone()),
        }
        ConfigEcho {
            metric: cfg.gain.kind.to_string(),
            ngram: cfg.gain.n,
            bleu_order: cfg.gain.max_order,
            lowercase: cfg.gain.lowercase,
            tokenizer: cfg.gain.tokenizer.to_string(),
            weighting: cfg.weighting.name().to_owned(),
            tau,
            beta,
            gamma,
            mixture,
            tie_break: cfg.tie_break.to_string(),
            dedup_hypotheses: cfg.dedup_hypotheses,
            length_unit: format!("{}-tokens", cfg.gain.tokenizer),
        }
    }
}

impl ConfigEcho {
    /// Rebuilds the configuration this echo was produced from.
    pub fn to_config(&self) -> Result<MbrConfig> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidConfig(format!("{} weighting needs {name}", self.weighting)))
        };
        let weighting = match self.weighting.as_str() {
            "uniform" => Weighting::Uniform,
            "temperature" => Weighting::Temperature { tau: need(self.tau, "tau")? },
            "length-norm" => Weighting::LengthNorm { beta: need(self.beta, "beta")? },
            "length-reward" => Weighting::LengthReward { gamma: need(self.gamma, "gamma")? },
            "mixture" => Weighting::Mixture { weights: self.mixture.clone().unwrap_or_default() },
            other => return Err(Error::InvalidConfig(format!("unknown weighting {other:?}"))),
        };
        let cfg = MbrConfig {
            gain: GainSpec {
                kind: self.metric.parse::<GainKind>()?,
                n: self.ngram,
                max_order: self.bleu_order,
                lowercase: self.lowercase,
                tokenizer: self.tokenizer.parse()?,
            },
            weighting,
            tie_break: self.tie_break.parse::<TieBreak>()?,
            dedup_hypotheses: self.dedup_hypotheses,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One output line of `decode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub selected_index: usize,
    pub selected_text: String,
    pub gain_estimates: Vec<f64>,
    pub weights: Vec<f64>,
    pub tie_broken: bool,
    pub config_echo: ConfigEcho,
}

impl ResultRecord {
    pub fn new(result: &DecodeResult, echo: &ConfigEcho) -> Self {
        ResultRecord {
            id: result.id.clone(),
            selected_index: result.selected_index,
            selected_text: result.selected_text.clone(),
            gain_estimates: result.gain_estimates.clone(),
            weights: result.weights.clone(),
            tie_broken: result.tie_broken,
            config_echo: echo.clone(),
        }
    }
}

pub fn write_results<'a, W, I>(out: &mut W, results: I, echo: &ConfigEcho) -> io::Result<()>
where
    W: Write + ?Sized,
    I: IntoIterator<Item = &'a DecodeResult>,
{
    for r in results {
        write_json_line(out, &ResultRecord::new(r, echo))?;
    }
    Ok(())
}

/// One output line of `matrix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub id: String,
    pub rows: usize,
    pub cols: usize,
    /// Rows are evidence, columns hypotheses; usable as `external_gain`.
    pub gain_matrix: Vec<Vec<f64>>,
    pub config_echo: ConfigEcho,
}

impl MatrixRecord {
    pub fn new(id: &str, matrix: &GainMatrix, echo: &ConfigEcho) -> Self {
        MatrixRecord {
            id: id.to_owned(),
            rows: matrix.rows(),
            cols: matrix.cols(),
            gain_matrix: matrix.to_rows(),
            config_echo: echo.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Candidate;

    #[test]
    fn g17_matches_printf() {
        // printf("%.17g") reference strings
        let cases = [
            (0.5, "0.5"),
            (1.0, "1"),
            (2.0 / 3.0, "0.66666666666666663"),
            (1.0 / 3.0, "0.33333333333333331"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1.5e-7, "1.4999999999999999e-07"),
            (0.0001, "0.0001"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (0.0, "0"),
            (-0.0, "-0"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g17(v), want, "{v:e}");
        }
    }

    #[test]
    fn g17_round_trips() {
        let mut x = 0.123_f64;
        for _ in 0..2000 {
            x = (x * 7.31 + 0.377).fract() * 10f64.powi((x * 40.0) as i32 - 20);
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            x = x.abs().fract() + 0.001;
        }
    }

    #[test]
    fn read_examples() {
        let input = r#"{"id":"1","evidence":[{"text":"a"},{"text":"a"},{"text":"b"}],"extra":true}"#;
        let insts = read_instances(input.as_bytes()).unwrap();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].evidence.len(), 3);
        assert!(insts[0].hypotheses.is_none());
        assert_eq!(insts[0].hypotheses().len(), 3);

        assert!(matches!(read_instances("not json".as_bytes()), Err(Error::Parse { line: 1, .. })));

        let missing = "\n{\"id\":\"2\",\"evidence\":[{\"score\":-1}]}";
        match read_instances(missing.as_bytes()) {
            Err(Error::Schema { line: 2, message }) => assert!(message.contains("text"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reader_continues_after_bad_line() {
        let input =
            "{\"id\":\"1\",\"evidence\":[{\"text\":\"a\"}]}\nbroken\n{\"id\":\"3\",\"evidence\":[{\"text\":\"c\"}]}\n";
        let got: Vec<_> = InstanceReader::new(input.as_bytes()).collect();
        assert_eq!(got.len(), 3);
        assert!(got[0].is_ok() && got[2].is_ok());
        assert!(matches!(got[1], Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn result_line_shape() {
        let r = DecodeResult {
            id: "x".into(),
            selected_index: 0,
            selected_text: "a".into(),
            gain_estimates: vec![2.0 / 3.0, 1.0 / 3.0],
            weights: vec![1.0 / 3.0; 3],
            ess: 3.0,
            tie_broken: false,
        };
        let echo = ConfigEcho::from(&MbrConfig::default());
        let mut out = Vec::new();
        write_results(&mut out, [&r], &echo).unwrap();
        let line = String::from_utf8(out).unwrap();
        assert!(line.ends_with('\n') && line.matches('\n').count() == 1);
        assert!(line.starts_with(r#"{"id":"x","selected_index":0,"selected_text":"a","gain_estimates":[0.66666666666666663,0.33333333333333331]"#));
        let back: ResultRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.gain_estimates, r.gain_estimates);

        let mut empty = Vec::new();
        write_results(&mut empty, [], &echo).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn echo_reproduces_config() {
        let cfgs = [
            MbrConfig::default(),
            MbrConfig::new(GainSpec::bleu(3), Weighting::Temperature { tau: 0.3 }).with_tie_break(TieBreak::Longest),
            MbrConfig::new(GainSpec::exact_match(), Weighting::LengthNorm { beta: 0.7 }).with_dedup(true),
            MbrConfig::new(GainSpec::rouge(2), Weighting::LengthReward { gamma: -0.25 }),
            MbrConfig::new(
                GainSpec::external(),
                Weighting::Mixture { weights: [("m1".to_string(), 0.7), ("m2".to_string(), 0.3)].into() },
            )
            .with_tie_break(TieBreak::HighestScore),
        ];
        for cfg in cfgs {
            let echo = ConfigEcho::from(&cfg);
            let mut buf = Vec::new();
            write_json_line(&mut buf, &echo).unwrap();
            let back: ConfigEcho = serde_json::from_slice(&buf).unwrap();
            assert_eq!(back.to_config().unwrap(), cfg);
        }
    }

    #[test]
    fn instances_round_trip() {
        let inst = Instance::new(
            "rt",
            vec![
                Candidate::new("a b").with_score(-0.1).with_model("m1").with_answer("b"),
                Candidate::new("c").with_tokens(["C"]),
            ],
        )
        .with_hypotheses(vec![Candidate::new("z").with_score(-1.0 / 3.0)])
        .with_external_gain(vec![vec![0.1], vec![2.0 / 7.0]]);
        let mut buf = Vec::new();
        write_instances(&mut buf, std::slice::from_ref(&inst)).unwrap();
        assert_eq!(read_instances(&buf[..]).unwrap(), vec![inst]);
    }
}
