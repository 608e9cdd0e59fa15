//! Resolved run configuration: config-file values overridden by flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// Prefix of the metadata line that echoes a run's configuration.
pub const ECHO_PREFIX: &str = "# bootperc config:";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Reads `key=value` lines; `#` starts a comment. If the text holds an
    /// echoed configuration (as written at the top of every output), only
    /// that line is read, so a whole output file can serve as a config.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some((lineno, rest)) =
            text.lines().enumerate().find_map(|(i, l)| l.trim().strip_prefix(ECHO_PREFIX).map(|rest| (i, rest)))
        {
            for token in rest.split_whitespace() {
                cfg.insert_pair(token).with_context(|| format!("config line {}", lineno + 1))?;
            }
            return Ok(cfg);
        }
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.insert_pair(line).with_context(|| format!("config line {}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse_file(&text)
    }

    fn insert_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| anyhow!("expected key=value, got '{pair}'"))?;
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            bail!("empty key in '{pair}'");
        }
        self.values.insert(k, v.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `key=value` pairs joined by spaces, keys sorted.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| anyhow!("--{key}: '{v}' is not a number")))
            .transpose()
    }

    pub fn int(&self, key: &str) -> Result<Option<u64>> {
        self.get(key).map(|v| parse_int(v).with_context(|| format!("--{key}"))).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| anyhow!("missing --{key}"))
    }

    pub fn require_int(&self, key: &str) -> Result<u64> {
        self.int(key)?.ok_or_else(|| anyhow!("missing --{key}"))
    }
}

/// Parses a nonnegative integer, also in scientific notation (`1e6`), and
/// rejects values that are not exactly integral.
pub fn parse_int(s: &str) -> Result<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let x: f64 = s.parse().map_err(|_| anyhow!("'{s}' is not a number"))?;
    if !x.is_finite() || x < 0.0 || x.fract() != 0.0 || x > 9_007_199_254_740_992.0 {
        bail!("'{s}' is not an exact nonnegative integer");
    }
    Ok(x as u64)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| anyhow!("'{t}' is not a number")))
        .collect()
}
