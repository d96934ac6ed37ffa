//! Line-oriented `key = value` configuration grammar.
//!
//! The grammar shared by sensor, scene, coupling-channel, and EMI-source
//! files:
//!
//! ```text
//! # comment
//! key = value            # one binding per line
//! key = v1,v2,v3         # lists are comma-separated
//! ```
//!
//! Blank lines and `#` comments (full-line or trailing) are ignored. Keys may
//! repeat where the consumer documents repetition (e.g. `resonance` lines).
//! Unknown keys are errors: a typo must not silently fall back to a default.

use crate::error::{Error, Result};

/// One parsed `key = value` binding with its source line for diagnostics.
#[derive(Debug, Clone)]
pub struct Binding {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parse the grammar from text. `source` names the file in error messages.
pub fn parse(text: &str, source: &str) -> Result<Vec<Binding>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::Parse {
                file: source.to_string(),
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            });
        };
        out.push(Binding {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

/// Parse a whole file.
pub fn parse_file(path: &std::path::Path) -> Result<Vec<Binding>> {
    let text = std::fs::read_to_string(path)?;
    parse(&text, &path.display().to_string())
}

impl Binding {
    pub fn f64(&self, source: &str) -> Result<f64> {
        self.value.parse::<f64>().map_err(|_| Error::Parse {
            file: source.to_string(),
            line: self.line,
            message: format!("`{}` is not a number for key `{}`", self.value, self.key),
        })
    }

    pub fn u32(&self, source: &str) -> Result<u32> {
        self.value.parse::<u32>().map_err(|_| Error::Parse {
            file: source.to_string(),
            line: self.line,
            message: format!("`{}` is not an integer for key `{}`", self.value, self.key),
        })
    }

    pub fn f64_list(&self, source: &str) -> Result<Vec<f64>> {
        self.value
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    file: source.to_string(),
                    line: self.line,
                    message: format!("`{}` is not a number in list for key `{}`", s.trim(), self.key),
                })
            })
            .collect()
    }

    pub fn unknown_key(&self, source: &str) -> Error {
        Error::Parse {
            file: source.to_string(),
            line: self.line,
            message: format!("unknown key `{}`", self.key),
        }
    }
}
