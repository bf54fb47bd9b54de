//! Line-oriented sectioned `key = value` text format.
//!
//! Shared by experiment description files and run configuration files:
//!
//! ```text
//! # comment
//! [section.name]
//! key = value
//! other = 1 2 3
//! ```
//!
//! Parsing is strict: every key must be consumed by the caller, and leftovers
//! are reported as errors (unknown keys are rejected, not ignored).

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CfgError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("section [{section}]: unknown key(s): {keys}")]
    UnknownKeys { section: String, keys: String },
    #[error("section [{section}]: missing required key '{key}'")]
    MissingKey { section: String, key: String },
    #[error("section [{section}] key '{key}': {msg}")]
    BadValue {
        section: String,
        key: String,
        msg: String,
    },
    #[error("missing required section [{0}]")]
    MissingSection(String),
}

/// One parsed section, with order-preserving duplicate detection.
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub name: String,
    entries: BTreeMap<String, String>,
    consumed: std::cell::RefCell<Vec<String>>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key).map(|s| s.as_str());
        if v.is_some() {
            self.consumed.borrow_mut().push(key.to_string());
        }
        v
    }

    pub fn require(&self, key: &str) -> Result<&str, CfgError> {
        self.get(key).ok_or_else(|| CfgError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    pub fn parse<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>, CfgError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| CfgError::BadValue {
                section: self.name.clone(),
                key: key.to_string(),
                msg: format!("cannot parse '{raw}'"),
            }),
        }
    }

    pub fn parse_require<V: std::str::FromStr>(&self, key: &str) -> Result<V, CfgError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| CfgError::BadValue {
            section: self.name.clone(),
            key: key.to_string(),
            msg: format!("cannot parse '{raw}'"),
        })
    }

    /// Whitespace-separated list of values.
    pub fn parse_list<V: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<V>>, CfgError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| CfgError::BadValue {
                        section: self.name.clone(),
                        key: key.to_string(),
                        msg: format!("cannot parse '{tok}'"),
                    })
                })
                .collect::<Result<Vec<V>, _>>()
                .map(Some),
        }
    }

    /// Error out if any key was never read through the accessors above.
    pub fn finish(&self) -> Result<(), CfgError> {
        let consumed = self.consumed.borrow();
        let leftover: Vec<&String> = self
            .entries
            .keys()
            .filter(|k| !consumed.contains(k))
            .collect();
        if leftover.is_empty() {
            Ok(())
        } else {
            Err(CfgError::UnknownKeys {
                section: self.name.clone(),
                keys: leftover
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
        }
    }
}

/// Parse the whole document into sections, in file order.
pub fn parse(text: &str) -> Result<Vec<Section>, CfgError> {
    let mut sections: Vec<Section> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| CfgError::Syntax {
                line,
                msg: "unterminated section header".into(),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                ..Default::default()
            });
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| CfgError::Syntax {
            line,
            msg: format!("expected 'key = value', got '{stripped}'"),
        })?;
        let section = sections.last_mut().ok_or_else(|| CfgError::Syntax {
            line,
            msg: "key outside of any [section]".into(),
        })?;
        let key = key.trim().to_string();
        if section.entries.contains_key(&key) {
            return Err(CfgError::Syntax {
                line,
                msg: format!("duplicate key '{key}' in section [{}]", section.name),
            });
        }
        section.entries.insert(key, value.trim().to_string());
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let doc = "# heading\n[alpha]\nx = 1\ny = 2.5\n[beta]\nname = hello world\n";
        let sections = parse(doc).unwrap();
        assert_eq!(sections.len(), 2);
        let alpha = &sections[0];
        assert_eq!(alpha.parse_require::<u32>("x").unwrap(), 1);
        assert!(alpha.finish().is_err()); // y never consumed
        assert_eq!(alpha.parse_require::<f64>("y").unwrap(), 2.5);
        assert!(alpha.finish().is_ok());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse("[a]\nbroken line\n").unwrap_err();
        assert!(matches!(err, CfgError::Syntax { line: 2, .. }));
        let err = parse("x = 1\n").unwrap_err();
        assert!(matches!(err, CfgError::Syntax { line: 1, .. }));
        let err = parse("[a]\nk = 1\nk = 2\n").unwrap_err();
        assert!(matches!(err, CfgError::Syntax { line: 3, .. }));
    }

    #[test]
    fn lists_parse() {
        let sections = parse("[s]\netas = 0.5 0.25 1.0\n").unwrap();
        let v: Vec<f64> = sections[0].parse_list("etas").unwrap().unwrap();
        assert_eq!(v, vec![0.5, 0.25, 1.0]);
    }
}
