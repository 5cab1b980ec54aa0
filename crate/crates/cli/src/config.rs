//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment, blank lines are skipped.
//! Keys use the long flag names, with `-` and `_` treated alike.
//! Values given on the command line take precedence over the file.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "d",
    "alpha",
    "alpha_sq",
    "gamma",
    "s",
    "mode",
    "nmax",
    "diamond",
    "alpha_sq_min",
    "alpha_sq_max",
    "alpha_sq_step",
    "certificate",
    "eta",
    "l_tot_km",
    "l_att_km",
    "d_min",
    "d_max",
    "table_output",
    "agreement_tol",
    "max_bit_flip",
    "max_overlap",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", no + 1))
            })?;
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{key}'",
                    no + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: String) {
        self.entries.insert(normalize(key), value);
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Layers command-line values over the config file over defaults, recording
/// what was used.
pub struct Resolver<'a> {
    file: &'a Config,
    used: RefCell<Config>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a Config) -> Self {
        Self {
            file,
            used: RefCell::new(Config::default()),
        }
    }

    pub fn used(&self) -> Config {
        self.used.borrow().clone()
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key '{key}': cannot parse '{raw}'"))),
        }
    }

    pub fn opt<T: FromStr + Display>(
        &self,
        cli: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        let value = match cli {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &value {
            self.used.borrow_mut().insert(key, v.to_string());
        }
        Ok(value)
    }

    pub fn or<T: FromStr + Display>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        let value = self.opt(cli, key)?.unwrap_or(default);
        self.used.borrow_mut().insert(key, value.to_string());
        Ok(value)
    }

    pub fn required<T: FromStr + Display>(&self, cli: Option<T>, key: &str) -> Result<T, CliError> {
        self.opt(cli, key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing --{} (flag or config key)",
                key.replace('_', "-")
            ))
        })
    }

    /// Flag that is set by either source; config accepts true/false.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool, CliError> {
        let value = cli || self.file_value::<bool>(key)?.unwrap_or(false);
        self.used.borrow_mut().insert(key, value.to_string());
        Ok(value)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(&self, cli: Vec<T>, key: &str) -> Result<Vec<T>, CliError> {
        let values = if !cli.is_empty() {
            cli
        } else {
            match self.file.get(key) {
                None => Vec::new(),
                Some(raw) => raw
                    .split(',')
                    .map(|x| {
                        x.trim().parse().map_err(|_| {
                            CliError::Usage(format!("config key '{key}': cannot parse '{x}'"))
                        })
                    })
                    .collect::<Result<_, _>>()?,
            }
        };
        if !values.is_empty() {
            let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
            self.used.borrow_mut().insert(key, joined.join(","));
        }
        Ok(values)
    }

    /// Tolerance: command line, then config file, then environment, then default.
    pub fn tolerance(
        &self,
        cli: Option<f64>,
        key: &str,
        env: &str,
        default: f64,
    ) -> Result<f64, CliError> {
        let value = match self.opt(cli, key)? {
            Some(v) => v,
            None => match std::env::var(env) {
                Ok(raw) => raw
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{env}: cannot parse '{raw}'")))?,
                Err(_) => default,
            },
        };
        if !(value.is_finite() && value >= 0.0) {
            return Err(CliError::Usage(format!(
                "{key} must be a finite non-negative number"
            )));
        }
        self.used.borrow_mut().insert(key, value.to_string());
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let text = "# run\nd = 4\ngamma=0.005 # loss\n\nalpha-sq = 9.000000000000002\nl_tot_km = 500,1000\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.get("alpha_sq"), Some("9.000000000000002"));
        assert_eq!(Config::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("gamma").is_err());
    }

    #[test]
    fn command_line_wins() {
        let cfg = Config::parse("gamma = 0.01\nd = 3").unwrap();
        let r = Resolver::new(&cfg);
        assert_eq!(r.required(Some(0.02), "gamma").unwrap(), 0.02);
        assert_eq!(r.required::<usize>(None, "d").unwrap(), 3);
        assert_eq!(r.or::<usize>(None, "s", 0).unwrap(), 0);
        assert!(r.required::<f64>(None, "eta").is_err());
        let used = r.used();
        assert_eq!(used.get("gamma"), Some("0.02"));
        assert_eq!(used.get("s"), Some("0"));
    }

    #[test]
    fn floats_survive_rendering() {
        let mut cfg = Config::default();
        let x = 0.1 + 0.2;
        cfg.insert("gamma", x.to_string());
        let back: f64 = Config::parse(&cfg.render())
            .unwrap()
            .get("gamma")
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(back, x);
    }
}
