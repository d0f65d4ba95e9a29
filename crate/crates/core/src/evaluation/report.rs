//! Sectioned plain-text report.
//!
//! ```text
//! [metrics]
//! model.top1 = 0.84
//! [activity]
//! developer	stage1	stage2
//! ```
//!
//! Key-value sections hold `key = value` lines; table sections hold
//! tab-separated rows. Section order is preserved.

use std::fmt::Display;

use super::EvalError;
use crate::htg::hex_sha256;

/// Sections whose content must be identical across reruns with equal inputs.
pub const METRIC_SECTIONS: [&str; 3] = ["metrics", "groups", "statistics"];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportSection {
    pub name: String,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalReport {
    pub sections: Vec<ReportSection>,
}

impl EvalReport {
    pub fn section_mut(&mut self, name: &str) -> &mut ReportSection {
        if let Some(i) = self.sections.iter().position(|s| s.name == name) {
            return &mut self.sections[i];
        }
        self.sections.push(ReportSection {
            name: name.to_string(),
            lines: Vec::new(),
        });
        self.sections.last_mut().unwrap()
    }

    pub fn section(&self, name: &str) -> Option<&ReportSection> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Display) {
        self.section_mut(section)
            .lines
            .push(format!("{key} = {value}"));
    }

    /// `None` values are written as `-`.
    pub fn set_opt<T: Display>(&mut self, section: &str, key: &str, value: Option<T>) {
        match value {
            Some(v) => self.set(section, key, v),
            None => self.set(section, key, "-"),
        }
    }

    pub fn row(&mut self, section: &str, cells: &[String]) {
        self.section_mut(section).lines.push(cells.join("\t"));
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)?
            .lines
            .iter()
            .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Option<f64> {
        self.get(section, key)?.parse().ok()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            out.push_str(&format!("[{}]\n", s.name));
            for l in &s.lines {
                out.push_str(l);
                out.push('\n');
            }
        }
        out
    }

    /// sha256 of the metric, group and statistics sections.
    pub fn metric_hash(&self) -> String {
        let only = EvalReport {
            sections: METRIC_SECTIONS
                .iter()
                .filter_map(|n| self.section(n).cloned())
                .collect(),
        };
        hex_sha256(only.to_text().as_bytes())
    }
}

pub fn parse_report_sections(text: &str) -> Result<EvalReport, EvalError> {
    let mut r = EvalReport::default();
    for (i, line) in text.lines().enumerate() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            r.sections.push(ReportSection {
                name: name.to_string(),
                lines: Vec::new(),
            });
        } else if let Some(s) = r.sections.last_mut() {
            s.lines.push(line.to_string());
        } else if !line.is_empty() {
            return Err(EvalError::Report {
                line: i + 1,
                msg: "content before the first section".into(),
            });
        }
    }
    Ok(r)
}
