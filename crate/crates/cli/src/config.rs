//! Command-line flags, key-value config files, and the merged `RunConfig`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "bosonic-lab", version, about = "Bounds, lemma checks, codebook audits and tail tables for the pure-loss bosonic channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Subcommand, Debug)]
pub enum CommandKind {
    /// Weak and strong converse bounds, trade-off points and simulation rate.
    Bounds(Flags),
    /// Rank bound on the cutoff projector and the output-shadow bound.
    Lemmas(Flags),
    /// Sample coherent-state codebooks and audit the photon-number constraint.
    Codebook(Flags),
    /// Exact tails against Chernoff and Hoeffding bounds, with optional sampling.
    Tails(Flags),
}

impl CommandKind {
    pub fn split(self) -> (Command, Flags) {
        match self {
            CommandKind::Bounds(f) => (Command::Bounds, f),
            CommandKind::Lemmas(f) => (Command::Lemmas, f),
            CommandKind::Codebook(f) => (Command::Codebook, f),
            CommandKind::Tails(f) => (Command::Tails, f),
        }
    }
}

/// Flags shared by every subcommand. List flags take comma-separated values
/// and `start:stop:step` ranges (stop inclusive).
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Transmissivity grid.
    #[arg(long)]
    pub eta: Option<String>,
    /// Photon budget N_S grid.
    #[arg(long)]
    pub ns: Option<String>,
    /// Number of modes grid.
    #[arg(long)]
    pub n: Option<String>,
    /// Rate grid in bits per mode; `cap+x` means g(ηN_S) + x.
    #[arg(long)]
    pub rate: Option<String>,
    /// Mixture weight grid (bounds) or geometric parameter grid (tails).
    #[arg(long)]
    pub p: Option<String>,
    /// Target error grid.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Theorem slack δ (bounds; empty derives it), ensemble offset (codebook),
    /// or deviation (tails).
    #[arg(long)]
    pub delta: Option<String>,
    /// Input shadow deficit grid; `preset` uses C(preset-delta, preset-mean)^(n/2).
    #[arg(long)]
    pub delta1: Option<String>,
    #[arg(long)]
    pub delta2: Option<String>,
    /// Hoeffding slack grid; `max` takes the largest admissible value.
    #[arg(long)]
    pub delta3: Option<String>,
    #[arg(long)]
    pub preset_delta: Option<String>,
    #[arg(long)]
    pub preset_mean: Option<String>,
    /// Which lemma rows to emit: 1, 2 or both.
    #[arg(long)]
    pub lemma: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of seeds (codebook).
    #[arg(long)]
    pub seeds: Option<String>,
    /// Codewords per codebook.
    #[arg(long)]
    pub messages: Option<String>,
    /// Monte Carlo samples per row (tails); 0 disables sampling.
    #[arg(long)]
    pub samples: Option<String>,
    /// Largest allowed messages × modes per codebook.
    #[arg(long)]
    pub budget: Option<String>,
    /// Photon-loss exponent placement: transmitted or swapped.
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the first sampled codebook as CSV plus a JSON header.
    #[arg(long)]
    pub codebook_out: Option<PathBuf>,
    /// Key-value file, one `flag = value` per line; flags given here win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the documented columns of this command's tables and exit.
    #[arg(long)]
    pub schema: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Bounds,
    Lemmas,
    Codebook,
    Tails,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaSelection {
    One,
    Two,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Transmitted,
    Swapped,
}

/// A rate value or an offset above `g(ηN_S)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RateSpec {
    Value(f64),
    AboveCapacity(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Delta1Spec {
    Value(f64),
    Preset,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Delta3Spec {
    Value(f64),
    Max,
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

impl FromStr for RateSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s.strip_prefix("cap") {
            Some("") => Ok(RateSpec::AboveCapacity(0.0)),
            Some(rest) => Ok(RateSpec::AboveCapacity(parse_real(rest)?)),
            None => parse_real(s).map(RateSpec::Value),
        }
    }
}

impl fmt::Display for RateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSpec::Value(v) => write!(f, "{v}"),
            RateSpec::AboveCapacity(x) if *x < 0.0 => write!(f, "cap{x}"),
            RateSpec::AboveCapacity(x) => write!(f, "cap+{x}"),
        }
    }
}

impl FromStr for Delta1Spec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "preset" {
            Ok(Delta1Spec::Preset)
        } else {
            parse_real(s).map(Delta1Spec::Value)
        }
    }
}

impl fmt::Display for Delta1Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta1Spec::Value(v) => write!(f, "{v}"),
            Delta1Spec::Preset => f.write_str("preset"),
        }
    }
}

impl FromStr for Delta3Spec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "max" {
            Ok(Delta3Spec::Max)
        } else {
            parse_real(s).map(Delta3Spec::Value)
        }
    }
}

impl fmt::Display for Delta3Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta3Spec::Value(v) => write!(f, "{v}"),
            Delta3Spec::Max => f.write_str("max"),
        }
    }
}

macro_rules! string_serde {
    ($($t:ty),*) => {$(
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
        impl TryFrom<String> for $t {
            type Error = String;
            fn try_from(s: String) -> Result<Self, String> {
                s.parse()
            }
        }
    )*};
}
string_serde!(RateSpec, Delta1Spec, Delta3Spec);

/// Values of one list flag. A range `a:b:h` expands to `a, a+h, …` up to
/// `b` inclusive, each element computed as `a + i·h`.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_real(v)?),
            [a, b, h] => {
                let (a, b, h) = (parse_real(a)?, parse_real(b)?, parse_real(h)?);
                if !(h > 0.0) {
                    return Err(format!("range step must be positive in {item:?}"));
                }
                if b < a {
                    continue;
                }
                let count = ((b - a) / h + 1e-9).floor() as u64 + 1;
                if count > 10_000_000 {
                    return Err(format!("range {item:?} too long"));
                }
                out.extend((0..count).map(|i| a + i as f64 * h));
            }
            _ => return Err(format!("expected a value or start:stop:step, got {item:?}")),
        }
    }
    Ok(out)
}

pub fn parse_int_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    let int = |t: &str| -> Result<usize, String> { t.trim().parse().map_err(|_| format!("not an integer: {t:?}")) };
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(int(v)?),
            [a, b, h] => {
                let (a, b, h) = (int(a)?, int(b)?, int(h)?);
                if h == 0 {
                    return Err(format!("range step must be positive in {item:?}"));
                }
                out.extend((a..=b).step_by(h));
            }
            _ => return Err(format!("expected an integer or start:stop:step, got {item:?}")),
        }
    }
    Ok(out)
}

fn parse_spec_list<T: FromStr<Err = String>>(s: &str) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if item.contains(':') {
            out.extend(parse_real_list(item)?.into_iter().map(|v| v.to_string().parse()).collect::<Result<Vec<T>, _>>()?);
        } else {
            out.push(item.parse()?);
        }
    }
    Ok(out)
}

/// Everything that determines a run's output. Output paths are not part of
/// it, so the same configuration written to two places gives equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub eta: Vec<f64>,
    pub ns: Vec<f64>,
    pub n: Vec<usize>,
    pub rate: Vec<RateSpec>,
    pub p: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta1: Vec<Delta1Spec>,
    pub delta2: Vec<f64>,
    pub delta3: Vec<Delta3Spec>,
    pub preset_delta: f64,
    pub preset_mean: f64,
    pub lemma: LemmaSelection,
    pub seed: u64,
    pub seeds: u64,
    pub messages: u64,
    pub samples: u64,
    pub budget: u64,
    pub convention: Convention,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub codebook_out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults per command; `delta` means something different to each.
    pub fn defaults(command: Command) -> Self {
        let delta = match command {
            Command::Bounds => vec![],
            Command::Lemmas => vec![],
            Command::Codebook => vec![0.1],
            Command::Tails => vec![0.1],
        };
        let p = match command {
            Command::Tails => vec![0.5],
            _ => vec![0.0],
        };
        RunConfig {
            command,
            eta: vec![0.5],
            ns: vec![1.0],
            n: vec![100],
            rate: vec![RateSpec::AboveCapacity(0.5)],
            p,
            epsilon: vec![0.0],
            delta,
            delta1: vec![Delta1Spec::Value(0.01)],
            delta2: vec![0.1],
            delta3: vec![Delta3Spec::Max],
            preset_delta: 0.1,
            preset_mean: 0.9,
            lemma: LemmaSelection::Both,
            seed: 0,
            seeds: 200,
            messages: 64,
            samples: 0,
            budget: 50_000_000,
            convention: Convention::Transmitted,
            format: Format::Csv,
            out: None,
            codebook_out: None,
        }
    }

    /// Merges defaults, then the config file, then command-line flags.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            values.extend(parse_config_file(&text)?);
        }
        for (key, v) in flag_values(flags) {
            values.insert(key.to_string(), v);
        }
        let mut cfg = RunConfig::defaults(command);
        for (key, v) in &values {
            cfg.set(key, v).map_err(|e| CliError::Config(format!("{key}: {e}")))?;
        }
        if let Some(o) = &flags.out {
            cfg.out = Some(o.clone());
        }
        if let Some(o) = &flags.codebook_out {
            cfg.codebook_out = Some(o.clone());
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let scalar = |v: &str| -> Result<u64, String> { v.trim().parse().map_err(|_| format!("not an integer: {v:?}")) };
        match key {
            "eta" => self.eta = parse_real_list(v)?,
            "ns" => self.ns = parse_real_list(v)?,
            "n" => self.n = parse_int_list(v)?,
            "rate" => self.rate = parse_spec_list(v)?,
            "p" => self.p = parse_real_list(v)?,
            "epsilon" => self.epsilon = parse_real_list(v)?,
            "delta" => self.delta = parse_real_list(v)?,
            "delta1" => self.delta1 = parse_spec_list(v)?,
            "delta2" => self.delta2 = parse_real_list(v)?,
            "delta3" => self.delta3 = parse_spec_list(v)?,
            "preset-delta" => self.preset_delta = parse_real(v)?,
            "preset-mean" => self.preset_mean = parse_real(v)?,
            "lemma" => {
                self.lemma = match v.trim() {
                    "1" => LemmaSelection::One,
                    "2" => LemmaSelection::Two,
                    "both" => LemmaSelection::Both,
                    other => return Err(format!("expected 1, 2 or both, got {other:?}")),
                }
            }
            "seed" => self.seed = scalar(v)?,
            "seeds" => self.seeds = scalar(v)?,
            "messages" => self.messages = scalar(v)?,
            "samples" => self.samples = scalar(v)?,
            "budget" => self.budget = scalar(v)?,
            "convention" => {
                self.convention = match v.trim() {
                    "transmitted" => Convention::Transmitted,
                    "swapped" => Convention::Swapped,
                    other => return Err(format!("expected transmitted or swapped, got {other:?}")),
                }
            }
            "format" => {
                self.format = match v.trim() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("expected csv or json, got {other:?}")),
                }
            }
            "out" => self.out = Some(PathBuf::from(v.trim())),
            "codebook-out" => self.codebook_out = Some(PathBuf::from(v.trim())),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

fn flag_values(f: &Flags) -> Vec<(&'static str, String)> {
    let pairs: [(&'static str, &Option<String>); 20] = [
        ("eta", &f.eta),
        ("ns", &f.ns),
        ("n", &f.n),
        ("rate", &f.rate),
        ("p", &f.p),
        ("epsilon", &f.epsilon),
        ("delta", &f.delta),
        ("delta1", &f.delta1),
        ("delta2", &f.delta2),
        ("delta3", &f.delta3),
        ("preset-delta", &f.preset_delta),
        ("preset-mean", &f.preset_mean),
        ("lemma", &f.lemma),
        ("seed", &f.seed),
        ("seeds", &f.seeds),
        ("messages", &f.messages),
        ("samples", &f.samples),
        ("budget", &f.budget),
        ("convention", &f.convention),
        ("format", &f.format),
    ];
    pairs
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|s| (k, s.clone())))
        .collect()
}

/// `key = value` lines; `#` starts a comment; keys may carry a leading `--`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}
