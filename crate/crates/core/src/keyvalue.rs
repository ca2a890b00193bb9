//! `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys are
//! consumed with the `take_*` methods; [`KeyValues::finish`] rejects anything
//! left over so that misspelled keys do not pass silently.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Parse { line, message: "empty key".into() });
            }
            if entries.iter().any(|(k, _, _)| *k == key) {
                return Err(Error::Parse { line, message: format!("duplicate key '{key}'") });
            }
            entries.push((key, value.trim().to_string(), line));
        }
        Ok(KeyValues { entries })
    }

    fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        let pos = self.entries.iter().position(|(k, _, _)| k == key)?;
        let (_, v, line) = self.entries.remove(pos);
        Some((v, line))
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.take_raw(key).map(|(v, _)| v)
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| Error::Parse {
                line,
                message: format!("invalid value '{v}' for '{key}'"),
            }),
        }
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take_parsed(key)
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take_parsed(key)
    }

    /// Comma-separated list of items parsed by `parse_item`.
    pub fn take_list<T>(
        &mut self,
        key: &str,
        mut parse_item: impl FnMut(&str) -> Option<T>,
    ) -> Result<Option<Vec<T>>> {
        let Some((v, line)) = self.take_raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                parse_item(item).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("invalid item '{item}' in '{key}'"),
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take_list(key, |s| s.parse().ok())
    }

    pub fn take_point_list(&mut self, key: &str) -> Result<Option<Vec<Point>>> {
        self.take_list(key, parse_point)
    }

    /// Fails if any key was not consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.first() {
            None => Ok(()),
            Some((k, _, line)) => Err(Error::Parse { line: *line, message: format!("unknown key '{k}'") }),
        }
    }
}

/// Parses a complex number such as `0.5`, `0.2i`, `-0.3+0.4i` or `0.1-2e-3i`.
pub fn parse_point(s: &str) -> Option<Point> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.replace('j', "i");
    if let Ok(z) = Point::from_str(&s) {
        return Some(z);
    }
    // forms the upstream parser rejects, e.g. a bare "i" or "-i"
    match s.as_str() {
        "i" | "+i" => Some(Point::i()),
        "-i" => Some(-Point::i()),
        _ => None,
    }
}
