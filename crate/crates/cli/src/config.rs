use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use grushin::spectral::MultiplierSpec;
use serde::{Deserialize, Serialize};

/// Thread budget: a fixed count or one per core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "ThreadsRepr", into = "ThreadsRepr")]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThreadsRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<ThreadsRepr> for Threads {
    type Error = String;

    fn try_from(r: ThreadsRepr) -> Result<Self, String> {
        match r {
            ThreadsRepr::Count(n) => Threads::from_str(&n.to_string()),
            ThreadsRepr::Word(w) => Threads::from_str(&w),
        }
    }
}

impl From<Threads> for ThreadsRepr {
    fn from(t: Threads) -> Self {
        match t {
            Threads::Auto => ThreadsRepr::Word("auto".into()),
            Threads::Fixed(n) => ThreadsRepr::Count(n),
        }
    }
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(Threads::Auto),
            t => match t.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
                _ => Err(format!(
                    "threads must be a positive integer or \"auto\", got {s:?}"
                )),
            },
        }
    }
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Grid resolution as cells per axis; `1/512` and `512` are the same.
pub fn parse_resolution(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let cells = if let Some(den) = s.strip_prefix("1/") {
        den.parse::<usize>().map_err(|e| e.to_string())?
    } else if let Ok(n) = s.parse::<usize>() {
        n
    } else {
        let h: f64 = s.parse().map_err(|_| format!("bad resolution {s:?}"))?;
        if !(h > 0.0 && h < 1.0) {
            return Err(format!(
                "resolution {s} must be a cell count or a spacing in (0, 1)"
            ));
        }
        (1.0 / h).round() as usize
    };
    Ok(cells)
}

fn parse_multiplier(s: &str) -> Result<MultiplierSpec, String> {
    serde_json::from_str(s).map_err(|e| format!("bad multiplier JSON: {e}"))
}

/// Parameters accepted by every subcommand; each command reads the ones it
/// needs and ignores the rest.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Largest degree (spectral truncation cap for sweeps).
    #[arg(long = "lmax")]
    #[serde(alias = "lmax", skip_serializing_if = "Option::is_none")]
    pub l_max: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// One or more comma-separated values.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Sobolev exponent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Lebesgue exponent of the triple norm, 1 or 2.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u8>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Heat times `r^2`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<Vec<f64>>,
    /// Bochner-Riesz radii, comma-separated.
    #[arg(long = "R", value_delimiter = ',')]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<Vec<f64>>,
    /// Spectral scales for the weighted Plancherel sweep, comma-separated.
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub big_n: Option<Vec<usize>>,
    /// Radii for volume slopes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[arg(long = "imax")]
    #[serde(alias = "imax", skip_serializing_if = "Option::is_none")]
    pub i_max: Option<u32>,
    /// Envelope family name.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long = "tail-k")]
    #[serde(alias = "tail-k", skip_serializing_if = "Option::is_none")]
    pub tail_k: Option<f64>,
    #[arg(long = "tail-c")]
    #[serde(alias = "tail-c", skip_serializing_if = "Option::is_none")]
    pub tail_c: Option<f64>,
    /// Multiplier as JSON, e.g. '{"kind":"heat","r2":0.1}'.
    #[arg(long, value_parser = parse_multiplier)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<MultiplierSpec>,
    /// Cells per axis (`512` or `1/512`).
    #[arg(long, value_parser = parse_resolution)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Random instances for the lemma checks.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Latitude of a heat kernel column to export.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Params {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &Params) {
        overlay!(
            self, top, l_max, epsilon, alpha, beta, delta, s, p, r, r2, big_r, big_n, radii, i_max,
            family, tail_k, tail_c, multiplier, resolution, count, instances, theta, l, m, x,
            column
        );
    }
}

/// A fully specified run, as read from `--config` and overridden by flags.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    /// Subcommand path, e.g. `"sweep bochner-riesz"`.
    pub command: String,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<Threads>,
    #[serde(flatten)]
    pub params: Params,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses a config object; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut take = |key: &str| map.remove(key).unwrap_or(serde_json::Value::Null);
        let command: Option<String> = serde_json::from_value(take("command")).context("command")?;
        let mut output_dir = serde_json::from_value(take("output_dir")).context("output_dir")?;
        if let Some(dir) =
            serde_json::from_value::<Option<PathBuf>>(take("output-dir")).context("output-dir")?
        {
            output_dir = Some(dir);
        }
        let seed = serde_json::from_value(take("seed")).context("seed")?;
        let threads = serde_json::from_value(take("threads")).context("threads")?;
        let params = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(Self {
            command: command.unwrap_or_default(),
            output_dir,
            seed,
            threads,
            params,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("grushin-out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// `GRUSHIN_THREADS` wins over the config value.
    pub fn thread_budget(&self) -> Result<Threads> {
        match std::env::var("GRUSHIN_THREADS") {
            Ok(v) if !v.trim().is_empty() => {
                Threads::from_str(&v).map_err(|e| anyhow::anyhow!("GRUSHIN_THREADS: {e}"))
            }
            _ => Ok(self.threads.unwrap_or_default()),
        }
    }

    pub fn command_words(&self) -> Result<(String, Option<String>)> {
        let mut words = self.command.split_whitespace().map(str::to_owned);
        let Some(first) = words.next() else {
            bail!("no command given (pass a subcommand or set \"command\" in the config)");
        };
        let second = words.next();
        if words.next().is_some() {
            bail!("command {:?} has too many words", self.command);
        }
        Ok((first, second))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_forms() {
        assert_eq!("auto".parse::<Threads>().unwrap(), Threads::Auto);
        assert_eq!("4".parse::<Threads>().unwrap(), Threads::Fixed(4));
        assert!("0".parse::<Threads>().is_err());
        let c = RunConfig::from_json(r#"{"command": "eval", "threads": 2}"#).unwrap();
        assert_eq!(c.threads, Some(Threads::Fixed(2)));
        let c = RunConfig::from_json(r#"{"command": "eval", "threads": "auto"}"#).unwrap();
        assert_eq!(c.threads, Some(Threads::Auto));
    }

    #[test]
    fn resolution_forms() {
        assert_eq!(parse_resolution("512"), Ok(512));
        assert_eq!(parse_resolution("1/256"), Ok(256));
        assert_eq!(parse_resolution("0.0078125"), Ok(128));
        assert!(parse_resolution("2.5").is_err());
    }

    #[test]
    fn config_flattens_params() {
        let c = RunConfig::from_json(
            r#"{"command": "sweep bochner-riesz", "delta": 0.75, "R": [8, 16]}"#,
        )
        .unwrap();
        assert_eq!(c.params.delta, Some(0.75));
        assert_eq!(c.params.big_r, Some(vec![8.0, 16.0]));
        assert!(RunConfig::from_json(r#"{"command": "eval", "bogus": 1}"#).is_err());
        let mut base = c.params.clone();
        base.overlay(&Params {
            delta: Some(1.0),
            ..Params::default()
        });
        assert_eq!(
            (base.delta, base.big_r.map(|r| r.len())),
            (Some(1.0), Some(2))
        );
        let c = RunConfig::from_json(r#"{"command": "scan envelope", "lmax": 64, "tail-k": 3}"#)
            .unwrap();
        assert_eq!((c.params.l_max, c.params.tail_k), (Some(64), Some(3.0)));
    }
}
