//! Flat `key = value` configuration with command-line overrides.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use imstark_core::{LatticeConfig, PotentialKind};

use crate::error::{CliError, CliResult};

const EXACT_KEYS: [&str; 7] = ["lattice.L", "lattice.J", "lattice.F", "lattice.kind", "out.dir", "tol.classify", "tol.bisect"];
const PREFIXES: [&str; 3] = ["grid.", "time.", "init."];

fn check_key(key: &str) -> CliResult<()> {
    let ok = EXACT_KEYS.contains(&key) || PREFIXES.iter().any(|p| key.len() > p.len() && key.starts_with(p));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown key '{key}'")))
    }
}

fn split_pair(text: &str) -> CliResult<(String, String)> {
    let (k, v) = text.split_once('=').ok_or_else(|| CliError::Config(format!("expected key=value, got '{text}'")))?;
    let (k, v) = (k.trim(), v.trim());
    check_key(k)?;
    if v.is_empty() {
        return Err(CliError::Config(format!("empty value for '{k}'")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Merged configuration. Typed getters record the value they resolve
/// (including defaults) so the run metadata lists every effective setting.
#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    /// Parses file text: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
            cfg.values.insert(k, v);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides; later ones win.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, pairs: &[S]) -> CliResult<()> {
        for p in pairs {
            let (k, v) = split_pair(p.as_ref())?;
            self.values.insert(k, v);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        check_key(key)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn explicit(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Every value read so far, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    /// Explicit keys that no getter asked for.
    pub fn unused_keys(&self) -> Vec<String> {
        let seen = self.resolved.borrow();
        self.values.keys().filter(|k| !seen.contains_key(*k)).cloned().collect()
    }

    fn record(&self, key: &str, text: String) {
        self.resolved.borrow_mut().insert(key.to_string(), text);
    }

    fn parsed<T: FromStr>(&self, key: &str, text: &str) -> CliResult<T> {
        text.parse().map_err(|_| CliError::Config(format!("cannot parse '{text}' for '{key}'")))
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, default: T) -> CliResult<T> {
        let v = match self.values.get(key) {
            Some(text) => self.parsed(key, text)?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Like [`Config::get`] but requires a strictly positive finite value.
    pub fn positive(&self, key: &str, default: f64) -> CliResult<f64> {
        let v: f64 = self.get(key, default)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Config(format!("'{key}' must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            Some(text) => {
                let v: T = self.parsed(key, text)?;
                self.record(key, v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display + Clone>(&self, key: &str, default: &[T]) -> CliResult<Vec<T>> {
        let v = match self.values.get(key) {
            Some(text) => text.split(',').map(|s| self.parsed(key, s.trim())).collect::<CliResult<Vec<T>>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("'{key}' is an empty list")));
        }
        let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        self.record(key, text.join(","));
        Ok(v)
    }

    pub fn kind(&self) -> CliResult<PotentialKind> {
        let text = self.get("lattice.kind", "imaginary".to_string())?;
        match text.as_str() {
            "imaginary" => Ok(PotentialKind::ImaginaryStark),
            "real" => Ok(PotentialKind::RealStark),
            other => Err(CliError::Config(format!("lattice.kind must be 'imaginary' or 'real', got '{other}'"))),
        }
    }

    /// Lattice from `lattice.*` with per-experiment defaults for `L` and `F`.
    pub fn lattice(&self, default_l: usize, default_f: f64) -> CliResult<LatticeConfig> {
        let l = self.get("lattice.L", default_l)?;
        let j = self.get("lattice.J", 1.0)?;
        let f = self.get("lattice.F", default_f)?;
        let kind = self.kind()?;
        LatticeConfig::new(l, j, f, kind).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Lattice without a field value, for sweeps over `F`.
    pub fn lattice_template(&self, default_l: usize) -> CliResult<LatticeConfig> {
        let l = self.get("lattice.L", default_l)?;
        let j = self.get("lattice.J", 1.0)?;
        let kind = self.kind()?;
        LatticeConfig::new(l, j, 0.0, kind).map_err(|e| CliError::Config(e.to_string()))
    }
}
