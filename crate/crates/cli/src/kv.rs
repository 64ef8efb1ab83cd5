//! Flat `key = value` files with `[section]` headers. `#` starts a comment.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub name: String,
    entries: BTreeMap<String, String>,
    line: usize,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| {
            CliError::Usage(format!(
                "[{}] (line {}) is missing key '{key}'",
                self.name, self.line
            ))
        })
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    CliError::Usage(format!("[{}] {key} = '{v}' is not valid", self.name))
                })
            })
            .transpose()
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.require(key)?;
        Ok(self.parse(key)?.expect("present"))
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_list(self.require(key)?)
            .map_err(|v| CliError::Usage(format!("[{}] {key}: '{v}' is not a number", self.name)))
    }

    /// Semicolon-separated rows of comma- or space-separated numbers.
    pub fn matrix(&self, key: &str) -> Result<Vec<Vec<f64>>, CliError> {
        self.require(key)?
            .split(';')
            .map(|row| {
                row.split([',', ' '])
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|_| {
                        CliError::Usage(format!("[{}] {key}: bad row '{}'", self.name, row.trim()))
                    })
            })
            .collect()
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| t.to_string()))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        CliError::Usage(format!("line {line_no}: unterminated section header"))
                    })?
                    .trim();
                if name.is_empty() {
                    return Err(CliError::Usage(format!(
                        "line {line_no}: empty section name"
                    )));
                }
                sections.push(Section {
                    name: name.to_string(),
                    entries: BTreeMap::new(),
                    line: line_no,
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {line_no}: expected key = value")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Usage(format!("line {line_no}: empty key")));
            }
            let section = match sections.last_mut() {
                Some(s) => s,
                None => {
                    sections.push(Section {
                        name: String::new(),
                        entries: BTreeMap::new(),
                        line: line_no,
                    });
                    sections.last_mut().expect("just pushed")
                }
            };
            if section
                .entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Usage(format!(
                    "line {line_no}: duplicate key '{key}'"
                )));
            }
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require_section(&self, name: &str) -> Result<&Section, CliError> {
        self.section(name)
            .ok_or_else(|| CliError::Usage(format!("missing [{name}] section")))
    }
}
