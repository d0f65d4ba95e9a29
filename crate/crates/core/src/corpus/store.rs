use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::records::*;
use super::CorpusError;

/// The four mandatory newline-delimited JSON streams plus optional file text.
pub struct RecordStreams<R> {
    pub issues: R,
    pub comments: R,
    pub events: R,
    pub commits: R,
    pub files: Option<R>,
}

/// Non-fatal findings from loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// `(issue_id, sha)` pairs where an event names a commit that is not in
    /// the commit stream.
    pub dangling_commit_refs: Vec<(String, String)>,
}

/// Immutable, order-normalized record store.
///
/// Issues iterate by `(created_at, issue_id)`, commits by
/// `(committed_at, sha)`, comments and events by issue then time.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    issues: Vec<IssueRecord>,
    comments: Vec<CommentRecord>,
    events: Vec<EventRecord>,
    commits: Vec<CommitRecord>,
    files: Vec<FileContent>,
    issue_index: HashMap<String, usize>,
    commit_index: HashMap<String, usize>,
    events_by_issue: HashMap<String, Vec<usize>>,
    comments_by_issue: HashMap<String, Vec<usize>>,
    validation: ValidationReport,
}

fn parse_stream<T: DeserializeOwned, R: BufRead>(
    stream: &'static str,
    reader: R,
) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            stream,
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Parses and validates the record streams into a [`Corpus`].
pub fn load_corpus<R: BufRead>(streams: RecordStreams<R>) -> Result<Corpus, CorpusError> {
    let issues = parse_stream("issues", streams.issues)?;
    let comments = parse_stream("comments", streams.comments)?;
    let events = parse_stream("events", streams.events)?;
    let commits = parse_stream("commits", streams.commits)?;
    let files = match streams.files {
        Some(r) => parse_stream("files", r)?,
        None => Vec::new(),
    };
    Corpus::from_records(issues, comments, events, commits, files)
}

fn check_id(id: &str, developer: bool) -> Result<(), CorpusError> {
    let bad = id.is_empty()
        || id.contains(['\t', '\n', '\r'])
        || (developer && (id.contains(',') || id.contains(char::is_whitespace)));
    if bad {
        Err(CorpusError::BadIdentifier(id.to_string()))
    } else {
        Ok(())
    }
}

impl Corpus {
    pub fn from_records(
        mut issues: Vec<IssueRecord>,
        mut comments: Vec<CommentRecord>,
        mut events: Vec<EventRecord>,
        mut commits: Vec<CommitRecord>,
        mut files: Vec<FileContent>,
    ) -> Result<Self, CorpusError> {
        issues.sort_by(|a, b| (a.created_at, &a.issue_id).cmp(&(b.created_at, &b.issue_id)));
        comments.sort_by(|a, b| {
            (&a.issue_id, a.created_at, &a.author).cmp(&(&b.issue_id, b.created_at, &b.author))
        });
        events.sort_by(|a, b| {
            (
                &a.issue_id,
                a.created_at,
                &a.event_type,
                &a.actor,
                &a.commit_sha,
            )
                .cmp(&(
                    &b.issue_id,
                    b.created_at,
                    &b.event_type,
                    &b.actor,
                    &b.commit_sha,
                ))
        });
        commits.sort_by(|a, b| (a.committed_at, &a.sha).cmp(&(b.committed_at, &b.sha)));
        files.sort_by(|a, b| a.path.cmp(&b.path));

        let mut issue_index = HashMap::with_capacity(issues.len());
        for (i, issue) in issues.iter().enumerate() {
            check_id(&issue.issue_id, false)?;
            check_id(&issue.reporter, true)?;
            if let Some(c) = &issue.closed_by {
                check_id(c, true)?;
            }
            for a in &issue.original_assignees {
                check_id(a, true)?;
            }
            if issue_index.insert(issue.issue_id.clone(), i).is_some() {
                return Err(CorpusError::Duplicate {
                    kind: "issue id",
                    id: issue.issue_id.clone(),
                });
            }
            match (issue.state, issue.closed_at) {
                (IssueState::Closed, None) | (IssueState::Open, Some(_)) => {
                    return Err(CorpusError::Invalid {
                        issue_id: issue.issue_id.clone(),
                        msg: "closed_at must be present exactly when state is closed".into(),
                    })
                }
                (_, Some(closed)) if closed < issue.created_at => {
                    return Err(CorpusError::Invalid {
                        issue_id: issue.issue_id.clone(),
                        msg: format!(
                            "closed_at {closed} precedes created_at {}",
                            issue.created_at
                        ),
                    })
                }
                _ => {}
            }
        }

        let mut commit_index = HashMap::with_capacity(commits.len());
        for (i, c) in commits.iter().enumerate() {
            check_id(&c.sha, false)?;
            check_id(&c.author, true)?;
            for fc in &c.file_changes {
                check_id(&fc.path, false)?;
            }
            if commit_index.insert(c.sha.clone(), i).is_some() {
                return Err(CorpusError::Duplicate {
                    kind: "commit sha",
                    id: c.sha.clone(),
                });
            }
        }

        let mut seen_files = BTreeSet::new();
        for f in &files {
            check_id(&f.path, false)?;
            if !seen_files.insert(f.path.as_str()) {
                return Err(CorpusError::Duplicate {
                    kind: "file path",
                    id: f.path.clone(),
                });
            }
        }

        let mut comments_by_issue: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in comments.iter().enumerate() {
            check_id(&c.author, true)?;
            if !issue_index.contains_key(&c.issue_id) {
                return Err(CorpusError::UnknownIssue {
                    stream: "comments",
                    issue_id: c.issue_id.clone(),
                });
            }
            comments_by_issue
                .entry(c.issue_id.clone())
                .or_default()
                .push(i);
        }

        let mut events_by_issue: HashMap<String, Vec<usize>> = HashMap::new();
        let mut validation = ValidationReport::default();
        for (i, e) in events.iter().enumerate() {
            check_id(&e.actor, true)?;
            if !issue_index.contains_key(&e.issue_id) {
                return Err(CorpusError::UnknownIssue {
                    stream: "events",
                    issue_id: e.issue_id.clone(),
                });
            }
            if let Some(sha) = &e.commit_sha {
                if !commit_index.contains_key(sha) {
                    validation
                        .dangling_commit_refs
                        .push((e.issue_id.clone(), sha.clone()));
                }
            }
            events_by_issue
                .entry(e.issue_id.clone())
                .or_default()
                .push(i);
        }

        Ok(Self {
            issues,
            comments,
            events,
            commits,
            files,
            issue_index,
            commit_index,
            events_by_issue,
            comments_by_issue,
            validation,
        })
    }

    pub fn issues(&self) -> &[IssueRecord] {
        &self.issues
    }

    pub fn comments(&self) -> &[CommentRecord] {
        &self.comments
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn commits(&self) -> &[CommitRecord] {
        &self.commits
    }

    pub fn files(&self) -> &[FileContent] {
        &self.files
    }

    pub fn issue_count(&self) -> usize {
        self.issues.len()
    }

    pub fn commit_count(&self) -> usize {
        self.commits.len()
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn issue(&self, id: &str) -> Option<&IssueRecord> {
        self.issue_index.get(id).map(|&i| &self.issues[i])
    }

    pub fn commit(&self, sha: &str) -> Option<&CommitRecord> {
        self.commit_index.get(sha).map(|&i| &self.commits[i])
    }

    pub fn events_for(&self, issue_id: &str) -> impl Iterator<Item = &EventRecord> {
        self.events_by_issue
            .get(issue_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.events[i])
    }

    pub fn comments_for(&self, issue_id: &str) -> impl Iterator<Item = &CommentRecord> {
        self.comments_by_issue
            .get(issue_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.comments[i])
    }

    /// Every developer id mentioned anywhere, sorted.
    pub fn developers(&self) -> BTreeSet<DeveloperId> {
        let mut devs = BTreeSet::new();
        for i in &self.issues {
            devs.insert(i.reporter.clone());
            devs.extend(i.closed_by.iter().cloned());
            devs.extend(i.original_assignees.iter().cloned());
        }
        devs.extend(self.comments.iter().map(|c| c.author.clone()));
        devs.extend(self.events.iter().map(|e| e.actor.clone()));
        devs.extend(self.commits.iter().map(|c| c.author.clone()));
        devs
    }

    /// Loads a directory previously written by [`Corpus::write_dir`] (or any
    /// directory holding `issues.jsonl`, `comments.jsonl`, `events.jsonl`,
    /// `commits.jsonl` and optionally `files.jsonl`).
    pub fn read_dir(dir: &Path) -> Result<Self, CorpusError> {
        let open = |name: &str| -> Result<BufReader<File>, CorpusError> {
            Ok(BufReader::new(File::open(dir.join(name))?))
        };
        let files_path = dir.join("files.jsonl");
        load_corpus(RecordStreams {
            issues: open("issues.jsonl")?,
            comments: open("comments.jsonl")?,
            events: open("events.jsonl")?,
            commits: open("commits.jsonl")?,
            files: if files_path.exists() {
                Some(open("files.jsonl")?)
            } else {
                None
            },
        })
    }

    /// Writes the normalized (sorted, integer-timestamp) streams.
    pub fn write_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir)?;
        fn dump<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
            let mut w = BufWriter::new(File::create(path)?);
            for item in items {
                serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            Ok(())
        }
        dump(&dir.join("issues.jsonl"), &self.issues)?;
        dump(&dir.join("comments.jsonl"), &self.comments)?;
        dump(&dir.join("events.jsonl"), &self.events)?;
        dump(&dir.join("commits.jsonl"), &self.commits)?;
        dump(&dir.join("files.jsonl"), &self.files)?;
        Ok(())
    }
}
