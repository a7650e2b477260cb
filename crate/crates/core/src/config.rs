//! Flat `key = value` configuration files and parsing of the values they
//! (and the command line) carry.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CovarianceMode, ModelSpec};

/// Keys accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "q",
    "h",
    "mode",
    "n",
    "r",
    "eps",
    "seed",
    "replicates",
    "edges",
    "points",
    "out",
    "svg",
    "manifest",
    "svg_replicates",
];

/// Parsed configuration: key → raw value, with the line each key came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    /// Parses UTF-8 text: one `key = value` per line, `#` starts a comment,
    /// blank lines are ignored. Unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`")));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(Error::Config(format!("line {line_no}: unknown key `{k}`")));
            }
            if entries.insert(k.to_string(), (v.to_string(), line_no)).is_some() {
                return Err(Error::Config(format!("line {line_no}: key `{k}` given twice")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Sets or overrides a value (command-line flags win over the file).
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), (value.into(), 0));
        Ok(())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                let at = if *line > 0 { format!("line {line}: ") } else { String::new() };
                Error::Config(format!("{at}cannot parse `{v}` as a value for `{key}`"))
            }),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }
}

/// `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Config(format!("cannot parse `{s}` as a complex number (expected `re,im`)"));
    let mut parts = s.split(',').map(str::trim);
    let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Whitespace-separated `re,im` pairs.
pub fn parse_points(s: &str) -> Result<Vec<Complex64>> {
    s.split_whitespace().map(parse_complex).collect()
}

/// Comma- or whitespace-separated reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("cannot parse `{t}` as a number"))))
        .collect()
}

/// Builds a model from its family name and parameters. `q` may be complex
/// (`re,im`) for the KMS family only.
pub fn model_from_parts(family: &str, q: Option<&str>, h: Option<f64>) -> Result<ModelSpec> {
    let need_q = || q.ok_or_else(|| Error::Config(format!("model `{family}` needs a value for q")));
    let spec = match family {
        "iid" => ModelSpec::Identity,
        "tridiag" => {
            let q = parse_complex(need_q()?)?;
            if q.im != 0.0 {
                return Err(Error::Config("the tridiagonal model needs a real q".into()));
            }
            ModelSpec::Tridiagonal { q: q.re }
        }
        "kms" => ModelSpec::Kms { q: parse_complex(need_q()?)? },
        "fgn" => ModelSpec::Fgn { h: h.ok_or_else(|| Error::Config("model `fgn` needs a value for h".into()))? },
        "fgn0" => ModelSpec::Fgn0,
        other => {
            return Err(Error::Config(format!("unknown model `{other}` (expected iid|tridiag|kms|fgn|fgn0)")));
        }
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

impl ConfigFile {
    /// Model and covariance mode from the `model`, `q`, `h` and `mode` keys.
    pub fn model(&self) -> Result<(ModelSpec, CovarianceMode)> {
        let family = self.get("model").ok_or_else(|| Error::Config("missing key `model`".into()))?;
        let spec = model_from_parts(family, self.get("q"), self.parsed("h")?)?;
        let mode = match self.get("mode") {
            Some(m) => m.parse()?,
            None => CovarianceMode::Inverse,
        };
        Ok((spec, mode))
    }
}
