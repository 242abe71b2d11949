//! Flat `key = value` files with optional `[section]` headers.
//!
//! Keys inside a section are addressed as `section.key`. Lines starting with
//! `#` or `;` are comments; values may be wrapped in double quotes and lists
//! are comma separated.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValueFile {
    entries: BTreeMap<String, Entry>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
                    return Err(Error::Parse { line: line_no, message: format!("bad section name `{name}`") });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse { line: line_no, message: format!("bad key `{key}`") });
            }
            let full = match &section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            };
            let value = unquote(value.trim());
            if entries.contains_key(&full) {
                return Err(Error::Parse { line: line_no, message: format!("duplicate key `{full}`") });
            }
            entries.insert(full, Entry { value, line: line_no });
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Insert or replace a value, e.g. from a command-line override.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: 0 });
    }

    /// Reject every key not accepted by `allowed`.
    pub fn reject_unknown(&self, allowed: impl Fn(&str) -> bool) -> Result<()> {
        for (k, e) in &self.entries {
            if !allowed(k) {
                return Err(Error::Parse { line: e.line, message: format!("unknown key `{k}`") });
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse_scalar(&e.value, e.line, key).map(Some),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Parse { line: 0, message: format!("missing required key `{key}`") })
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        if e.value.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        e.value
            .split(',')
            .map(|part| parse_scalar(part.trim(), e.line, key))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Canonical text: sorted `key=value` lines. Stable input for hashing.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(&e.value);
            out.push('\n');
        }
        out
    }
}

fn parse_scalar<T: FromStr>(text: &str, line: usize, key: &str) -> Result<T> {
    text.parse::<T>()
        .map_err(|_| Error::Parse { line, message: format!("cannot parse `{text}` for key `{key}`") })
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' | ';' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> String {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        v[1..v.len() - 1].to_string()
    } else {
        v.to_string()
    }
}
