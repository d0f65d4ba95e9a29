//! `labels.tsv`: one row per closed issue.
//!
//! ```text
//! #issue_id	created_at	closed_at	rule	fixers
//! 1042	1500000000	1500086400	commits	alice,bob
//! 1043	1500003600	1500090000	unlabeled	-
//! ```

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::{CorpusError, DeveloperId, LabelRule, LabeledIssue, Timestamp};

const HEADER: &str = "#issue_id\tcreated_at\tclosed_at\trule\tfixers";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub issue_id: String,
    pub created_at: Timestamp,
    pub closed_at: Timestamp,
    pub rule: LabelRule,
    pub fixers: BTreeSet<DeveloperId>,
}

impl From<&LabeledIssue> for LabelRow {
    fn from(l: &LabeledIssue) -> Self {
        Self {
            issue_id: l.issue.issue_id.clone(),
            created_at: l.issue.created_at,
            closed_at: l.issue.closed_at.expect("labeled issues are closed"),
            rule: l.rule,
            fixers: l.fixers.clone(),
        }
    }
}

pub fn write_labels<W: Write>(mut w: W, rows: &[LabelRow]) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        let fixers = if r.fixers.is_empty() {
            "-".to_string()
        } else {
            r.fixers.iter().cloned().collect::<Vec<_>>().join(",")
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.issue_id,
            r.created_at,
            r.closed_at,
            r.rule.as_str(),
            fixers
        )?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<LabelRow>, CorpusError> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| CorpusError::Labels { line: no, msg };
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, created, closed, rule, fixers] = cols[..] else {
            return Err(err(format!("expected 5 columns, got {}", cols.len())));
        };
        let parse_ts = |s: &str| s.parse::<i64>().map_err(|e| err(format!("`{s}`: {e}")));
        rows.push(LabelRow {
            issue_id: id.to_string(),
            created_at: parse_ts(created)?,
            closed_at: parse_ts(closed)?,
            rule: LabelRule::parse(rule).ok_or_else(|| err(format!("unknown rule `{rule}`")))?,
            fixers: if fixers == "-" {
                BTreeSet::new()
            } else {
                fixers.split(',').map(str::to_string).collect()
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![
            LabelRow {
                issue_id: "a".into(),
                created_at: 1,
                closed_at: 5,
                rule: LabelRule::LinkedCommits,
                fixers: ["x".to_string(), "y".to_string()].into(),
            },
            LabelRow {
                issue_id: "b".into(),
                created_at: 2,
                closed_at: 3,
                rule: LabelRule::Unlabeled,
                fixers: BTreeSet::new(),
            },
        ];
        let mut buf = Vec::new();
        write_labels(&mut buf, &rows).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), rows);
        assert!(read_labels("a\t1\n".as_bytes()).is_err());
    }
}
