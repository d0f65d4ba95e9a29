use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Raw account id. No alias merging is performed.
pub type DeveloperId = String;

/// UTC seconds since the Unix epoch.
pub type Timestamp = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub issue_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub reporter: DeveloperId,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
    #[serde(
        default,
        with = "timestamp::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub closed_at: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_by: Option<DeveloperId>,
    #[serde(default)]
    pub original_assignees: BTreeSet<DeveloperId>,
    pub state: IssueState,
}

impl IssueRecord {
    pub fn is_closed(&self) -> bool {
        self.state == IssueState::Closed
    }

    /// Title and body joined for text similarity.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub issue_id: String,
    pub author: DeveloperId,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub issue_id: String,
    pub actor: DeveloperId,
    pub event_type: String,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commit_sha: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeType {
    Created,
    Modified,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub change_type: ChangeType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub sha: String,
    pub author: DeveloperId,
    #[serde(with = "timestamp")]
    pub committed_at: Timestamp,
    #[serde(default)]
    pub file_changes: Vec<FileChange>,
}

/// Optional source text for a file path, used by text similarity. Files
/// without an entry are indexed by the tokens of their path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileContent {
    pub path: String,
    #[serde(default)]
    pub content: String,
}

/// Accepts integer seconds or an ISO-8601 / RFC 3339 string; always writes
/// integers.
pub(crate) mod timestamp {
    use chrono::{DateTime, NaiveDate, NaiveDateTime};
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }

    pub fn parse_text(s: &str) -> Result<i64, String> {
        let s = s.trim();
        if let Ok(v) = s.parse::<i64>() {
            return Ok(v);
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Ok(dt.timestamp());
        }
        for fmt in [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M:%S%.f",
        ] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(dt.and_utc().timestamp());
            }
        }
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(d
                .and_hms_opt(0, 0, 0)
                .expect("midnight")
                .and_utc()
                .timestamp());
        }
        Err(format!("unrecognized timestamp `{s}`"))
    }

    fn from_raw<E: de::Error>(raw: Raw) -> Result<i64, E> {
        match raw {
            Raw::Int(v) => Ok(v),
            Raw::Float(f) if f.fract() == 0.0 && f.is_finite() => Ok(f as i64),
            Raw::Float(f) => Err(E::custom(format!("non-integer timestamp {f}"))),
            Raw::Text(s) => parse_text(&s).map_err(E::custom),
        }
    }

    pub fn serialize<S: Serializer>(v: &i64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
        from_raw(Raw::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<i64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(v),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i64>, D::Error> {
            match Option::<Raw>::deserialize(d)? {
                None => Ok(None),
                Some(raw) => from_raw(raw).map(Some),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps_accept_integers_and_iso8601() {
        let a: CommentRecord =
            serde_json::from_str(r#"{"issue_id":"1","author":"a","created_at":86400}"#).unwrap();
        let b: CommentRecord = serde_json::from_str(
            r#"{"issue_id":"1","author":"a","created_at":"1970-01-02T00:00:00Z","extra":true}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(timestamp::parse_text("1970-01-01T01:00:00+01:00"), Ok(0));
        assert!(timestamp::parse_text("yesterday").is_err());
    }

    #[test]
    fn issue_optional_fields_default() {
        let i: IssueRecord = serde_json::from_str(
            r#"{"issue_id":"7","reporter":"r","created_at":5,"state":"open"}"#,
        )
        .unwrap();
        assert_eq!(i.closed_at, None);
        assert!(i.original_assignees.is_empty());
        let back = serde_json::to_string(&i).unwrap();
        assert!(!back.contains("closed_at"));
    }
}
