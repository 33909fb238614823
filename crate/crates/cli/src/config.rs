//! `key = value` configuration files.
//!
//! Keys are the long flag names without the leading dashes. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const KEYS: [&str; 13] = [
    "a",
    "min",
    "max",
    "points",
    "out",
    "svg",
    "n-max",
    "scenario",
    "mmse-quadrature",
    "beta-sq",
    "rate",
    "perturb",
    "linear-y",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let text = String::from_utf8(bytes).with_context(|| format!("config {} is not UTF-8", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got `{line}`", i + 1);
            };
            let key = key.trim().trim_start_matches("--").to_string();
            if !KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", i + 1);
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(Self { values })
    }

    /// Parsed value for `key`, or `None` when absent.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}` = `{v}`: {e}")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.values.get(key).map(String::as_str) {
            None | Some("false") => Ok(false),
            Some("true") | Some("") => Ok(true),
            Some(v) => bail!("config key `{key}` = `{v}`: expected true or false"),
        }
    }
}

/// `cli` if given, else the config value.
pub fn pick<T>(cli: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match cli {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let c = Config::parse("# sweep\na = 1.5\n\n--points=7\nmmse-quadrature = true\n").unwrap();
        assert_eq!(c.get::<f64>("a").unwrap(), Some(1.5));
        assert_eq!(c.get::<usize>("points").unwrap(), Some(7));
        assert!(c.flag("mmse-quadrature").unwrap());
        assert!(!c.flag("linear-y").unwrap());
        assert_eq!(c.get::<f64>("min").unwrap(), None);
    }

    #[test]
    fn flags_win_over_config() {
        let c = Config::parse("a = 1.5").unwrap();
        assert_eq!(pick(Some(2.0), &c, "a").unwrap(), Some(2.0));
        assert_eq!(pick(None::<f64>, &c, "a").unwrap(), Some(1.5));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("a 1.5").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        assert!(Config::parse("a = x").unwrap().get::<f64>("a").is_err());
        assert!(Config::parse("mmse-quadrature = maybe")
            .unwrap()
            .flag("mmse-quadrature")
            .is_err());
    }
}
