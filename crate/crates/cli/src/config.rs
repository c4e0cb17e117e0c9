//! Sectioned key-value configuration.
//!
//! ```text
//! # comment
//! [run]
//! seed = 11
//!
//! [sampler]
//! b_per_s = 0.002
//! param_interval_ms = 10
//! ```
//!
//! Keys are addressed as `section.key`. Every lookup records the resolved
//! value, so the full effective configuration (defaults included) can be
//! written back out in canonical form.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{origin}: `{key}`: {msg}")]
    Value { origin: String, key: String, msg: String },
    #[error("{origin}: unknown key `{key}`")]
    Unknown { origin: String, key: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Origin {
    Line(usize),
    Flag,
}

impl Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: Origin,
}

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(ConfigError::Syntax { line, msg: "unclosed section header".into() })?.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(ConfigError::Syntax { line, msg: format!("bad section name `{name}`") });
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = s.split_once('=').ok_or(ConfigError::Syntax { line, msg: format!("expected `key = value`, found `{s}`") })?;
            let k = k.trim();
            let sec = section.as_ref().ok_or(ConfigError::Syntax { line, msg: format!("key `{k}` outside any section") })?;
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ConfigError::Syntax { line, msg: format!("bad key `{k}`") });
            }
            let key = format!("{sec}.{k}");
            if let Some(prev) = cfg.entries.get(&key) {
                return Err(ConfigError::Syntax { line, msg: format!("`{key}` already set at {}", prev.origin) });
            }
            cfg.entries.insert(key, Entry { value: v.trim().to_string(), origin: Origin::Line(line) });
        }
        Ok(cfg)
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value { origin: Origin::Flag.to_string(), key: assignment.into(), msg: "expected section.key=value".into() };
        let (k, v) = assignment.split_once('=').ok_or_else(bad)?;
        let k = k.trim();
        if k.split('.').count() != 2 || k.split('.').any(str::is_empty) {
            return Err(bad());
        }
        self.entries.insert(k.to_string(), Entry { value: v.trim().to_string(), origin: Origin::Flag });
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Value of `key` parsed as `T`, or `default`.
    pub fn get<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        let v = match self.entries.get(key) {
            Some(e) => e
                .value
                .parse::<T>()
                .map_err(|err| ConfigError::Value { origin: e.origin.to_string(), key: key.into(), msg: format!("cannot parse `{}`: {err}", e.value) })?,
            None => default,
        };
        self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_str(&self, key: &str, default: &str) -> Result<String, ConfigError> {
        self.get(key, default.to_string())
    }

    /// Optional string; absent keys stay out of the resolved set.
    pub fn get_opt(&self, key: &str) -> Option<String> {
        let v = self.entries.get(key)?.value.clone();
        self.resolved.borrow_mut().insert(key.to_string(), v.clone());
        Some(v)
    }

    /// Comma-separated list of numbers.
    pub fn get_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = match self.entries.get(key) {
            Some(e) => e
                .value
                .split(',')
                .map(|p| {
                    p.trim().parse::<f64>().map_err(|err| ConfigError::Value {
                        origin: e.origin.to_string(),
                        key: key.into(),
                        msg: format!("cannot parse `{}`: {err}", p.trim()),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?,
            None => default.to_vec(),
        };
        let text = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        self.resolved.borrow_mut().insert(key.to_string(), text);
        Ok(v)
    }

    /// Fails on the first key that no lookup asked for.
    pub fn check_unused(&self) -> Result<(), ConfigError> {
        let used: BTreeSet<String> = self.resolved.borrow().keys().cloned().collect();
        for (k, e) in &self.entries {
            if !used.contains(k) {
                return Err(ConfigError::Unknown { origin: e.origin.to_string(), key: k.clone() });
            }
        }
        Ok(())
    }

    /// Resolved configuration in canonical form: sections and keys sorted.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        let resolved = self.resolved.borrow();
        for (k, v) in resolved.iter() {
            let (sec, key) = k.split_once('.').unwrap_or(("", k));
            if sec != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{sec}]\n"));
                current = sec;
            }
            out.push_str(&format!("{key} = {v}\n"));
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# top\n[run]\nseed = 4\n\n[sampler]\nb_per_s = 0.002 # inline\nsteps = 10\n";

    #[test]
    fn parse_get_and_canonical() {
        let c = Config::parse(TEXT).unwrap();
        assert_eq!(c.get("run.seed", 0u64).unwrap(), 4);
        assert_eq!(c.get("sampler.b_per_s", 1.0).unwrap(), 0.002);
        assert_eq!(c.get("sampler.steps", 0u64).unwrap(), 10);
        assert_eq!(c.get("sampler.dt_ms", 1.5).unwrap(), 1.5);
        c.check_unused().unwrap();
        let canon = c.canonical();
        assert_eq!(canon, "[run]\nseed = 4\n\n[sampler]\nb_per_s = 0.002\ndt_ms = 1.5\nsteps = 10\n");
        // the canonical text parses back to the same values
        let d = Config::parse(&canon).unwrap();
        assert_eq!(d.get("sampler.dt_ms", 0.0).unwrap(), 1.5);
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(Config::parse("seed = 1").unwrap_err(), ConfigError::Syntax { line: 1, msg: "key `seed` outside any section".into() });
        let e = Config::parse("[a]\nx = 1\n\n[a]\nx = 2\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 5, .. }));
        assert!(matches!(Config::parse("[a\n").unwrap_err(), ConfigError::Syntax { line: 1, .. }));
        assert!(matches!(Config::parse("[a]\njunk\n").unwrap_err(), ConfigError::Syntax { line: 2, .. }));
        let c = Config::parse("[a]\n\nx = abc\n").unwrap();
        let e = c.get("a.x", 1.0).unwrap_err();
        assert!(e.to_string().starts_with("line 3: `a.x`"), "{e}");
    }

    #[test]
    fn unknown_keys_and_overrides() {
        let mut c = Config::parse("[a]\nx = 1\ny = 2\n").unwrap();
        c.set("a.x=5").unwrap();
        assert!(c.set("ax=5").is_err());
        assert!(c.set("a.x").is_err());
        assert_eq!(c.get("a.x", 0i32).unwrap(), 5);
        let e = c.check_unused().unwrap_err();
        assert_eq!(e.to_string(), "line 3: unknown key `a.y`");
        assert_eq!(c.get_list("a.l", &[1.0, 2.5]).unwrap(), vec![1.0, 2.5]);
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
