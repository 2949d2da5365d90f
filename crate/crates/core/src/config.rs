//! Plain-text `key = value` study configuration.
//!
//! ```text
//! # k = 1 grid
//! problem = paper-sec5
//! k = 1
//! eps = 1e-6, 1e-8
//! n = 4, 8, 16, 32
//! mode = true-error
//! ```
//!
//! Lists are comma separated. Blank lines and `#` comments are ignored.

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{HdgError, Result};
use crate::study::{Mode, StudyConfig};

pub const KEYS: &[&str] = &[
    "problem",
    "k",
    "eps",
    "n",
    "sigma",
    "tau",
    "mode",
    "quad_assembly",
    "quad_error",
    "tol",
    "out",
    "strict",
    "max_n",
    "diagnostics",
];

/// Parses `text` on top of `StudyConfig::default()`.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let mut cfg = StudyConfig::default();
    apply_config(&mut cfg, text)?;
    Ok(cfg)
}

/// Applies every assignment in `text` to `cfg`. A key may appear once.
pub fn apply_config(cfg: &mut StudyConfig, text: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| HdgError::Config { line, msg };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got '{body}'")))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) {
            return Err(err(format!("unknown key '{key}'")));
        }
        if !seen.insert(key.clone()) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        if value.is_empty() {
            return Err(err(format!("empty value for '{key}'")));
        }
        match key.as_str() {
            "problem" => cfg.problem = value.to_string(),
            "k" => cfg.ks = list(value).map_err(err)?,
            "eps" => cfg.epsilons = list(value).map_err(err)?,
            "n" => cfg.ns = list(value).map_err(err)?,
            "sigma" => cfg.sigma = Some(scalar(value).map_err(err)?),
            "tau" => cfg.tau = scalar(value).map_err(err)?,
            "mode" => cfg.mode = Mode::from_str(value).map_err(|e| err(e.to_string()))?,
            "quad_assembly" => cfg.quad_assembly = Some(scalar(value).map_err(err)?),
            "quad_error" => cfg.quad_error = Some(scalar(value).map_err(err)?),
            "tol" => cfg.tol = scalar(value).map_err(err)?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            "strict" => cfg.strict = boolean(value).map_err(err)?,
            "max_n" => cfg.max_n = Some(scalar(value).map_err(err)?),
            "diagnostics" => cfg.diagnostics = boolean(value).map_err(err)?,
            _ => unreachable!("key checked against KEYS"),
        }
    }
    Ok(())
}

fn scalar<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse '{}'", s.trim()))
}

fn list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(scalar).collect()
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected a boolean, got '{other}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg = parse_config(
            "# grid\nproblem = paper-sec5\nk = 1, 2\neps = 1e-6,1e-8\nn = 4, 8\n\
             sigma = 2.5\ntau = 3\nmode = both\nquad_error = 9\nstrict = yes\nmax-n = 64 # cap\n",
        )
        .unwrap();
        assert_eq!(cfg.ks, vec![1, 2]);
        assert_eq!(cfg.epsilons, vec![1e-6, 1e-8]);
        assert_eq!(cfg.ns, vec![4, 8]);
        assert_eq!(cfg.sigma, Some(2.5));
        assert_eq!(cfg.mode, Mode::Both);
        assert_eq!(cfg.quad_error, Some(9));
        assert!(cfg.strict);
        assert_eq!(cfg.max_n, Some(64));
    }

    #[test]
    fn empty_text_is_default() {
        assert_eq!(parse_config("\n# nothing\n").unwrap(), StudyConfig::default());
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, want) in [
            ("k = 1\nbogus = 3", 2),
            ("k = one", 1),
            ("\n\nk 1", 3),
            ("k = 1\nk = 2", 2),
            ("strict = maybe", 1),
            ("eps =", 1),
        ] {
            match parse_config(text) {
                Err(HdgError::Config { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
