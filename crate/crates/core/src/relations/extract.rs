use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::tfidf::{build_tfidf_index, TfidfIndex};
use super::types::*;
use super::RelationError;
use crate::corpus::{
    ChangeType, CommentRecord, CommitRecord, Corpus, IssueRecord, LabelRule, LabeledIssue,
    Timestamp,
};

/// One Report edge per issue and one Comment edge per distinct
/// `(issue, commenter)` at the first comment time. Comments on issues not in
/// `labeled` are ignored.
pub fn extract_report_comment(labeled: &[LabeledIssue], comments: &[CommentRecord]) -> Vec<Edge> {
    let known: BTreeSet<&str> = labeled.iter().map(|l| l.id()).collect();
    let mut edges: Vec<Edge> = labeled
        .iter()
        .map(|l| {
            Edge::new(
                RelationType::Report,
                NodeRef::issue(l.id()),
                NodeRef::developer(&l.issue.reporter),
                l.issue.created_at,
            )
        })
        .collect();
    let mut first: BTreeMap<(&str, &str), Timestamp> = BTreeMap::new();
    for c in comments
        .iter()
        .filter(|c| known.contains(c.issue_id.as_str()))
    {
        first
            .entry((&c.issue_id, &c.author))
            .and_modify(|t| *t = (*t).min(c.created_at))
            .or_insert(c.created_at);
    }
    edges.extend(first.into_iter().map(|((i, d), at)| {
        Edge::new(
            RelationType::Comment,
            NodeRef::issue(i),
            NodeRef::developer(d),
            at,
        )
    }));
    sort_edges(&mut edges);
    edges
}

/// Create/Remove edges from commits; modified changes produce none and
/// repeated `(developer, file, relation)` keeps the earliest time.
pub fn extract_create_remove(commits: &[CommitRecord]) -> Vec<Edge> {
    let mut first: BTreeMap<(RelationType, &str, &str), Timestamp> = BTreeMap::new();
    for c in commits {
        for fc in &c.file_changes {
            let rel = match fc.change_type {
                ChangeType::Created => RelationType::Create,
                ChangeType::Removed => RelationType::Remove,
                ChangeType::Modified => continue,
            };
            first
                .entry((rel, &c.author, &fc.path))
                .and_modify(|t| *t = (*t).min(c.committed_at))
                .or_insert(c.committed_at);
        }
    }
    let mut edges: Vec<Edge> = first
        .into_iter()
        .map(|((rel, d, f), at)| Edge::new(rel, NodeRef::developer(d), NodeRef::file(f), at))
        .collect();
    sort_edges(&mut edges);
    edges
}

/// Textual Similar edges: top-`k` indexed files with cosine ≥ `tau`.
pub fn similar_edges_text(
    issue: &IssueRecord,
    index: &TfidfIndex,
    k: usize,
    tau: f64,
) -> Vec<Edge> {
    similar_edges_text_filtered(issue, index, k, tau, |_| true)
}

/// As [`similar_edges_text`], restricted to files accepted by `exists`.
pub fn similar_edges_text_filtered<F: Fn(&str) -> bool>(
    issue: &IssueRecord,
    index: &TfidfIndex,
    k: usize,
    tau: f64,
    exists: F,
) -> Vec<Edge> {
    let q = index.vectorize(&issue.text());
    index
        .top_k(&q, k, tau, exists)
        .into_iter()
        .map(|(f, w)| {
            Edge::new(
                RelationType::Similar,
                NodeRef::issue(&issue.issue_id),
                NodeRef::file(f),
                issue.created_at,
            )
            .with_weight(w)
            .with_provenance(Provenance::Textual)
        })
        .collect()
}

/// Traced Similar edges to every file touched by the issue's pre-close
/// linked commits. Commits in `linked_commits` at or after close are ignored.
pub fn similar_edges_traced(
    issue: &LabeledIssue,
    linked_commits: &[&CommitRecord],
) -> Result<Vec<Edge>, RelationError> {
    let closed_at = issue
        .issue
        .closed_at
        .ok_or_else(|| RelationError::NoTracedCommits(issue.id().to_string()))?;
    let files: BTreeSet<&str> = linked_commits
        .iter()
        .filter(|c| c.committed_at < closed_at)
        .flat_map(|c| c.file_changes.iter().map(|fc| fc.path.as_str()))
        .collect();
    if !linked_commits.iter().any(|c| c.committed_at < closed_at) {
        return Err(RelationError::NoTracedCommits(issue.id().to_string()));
    }
    Ok(files
        .into_iter()
        .map(|f| {
            Edge::new(
                RelationType::Similar,
                NodeRef::issue(issue.id()),
                NodeRef::file(f),
                issue.issue.created_at,
            )
            .with_provenance(Provenance::Traced)
        })
        .collect())
}

/// Create/remove history per file, derived from Create/Remove edges.
///
/// A file without a Create edge exists from the beginning of time. A file
/// exists at `t` when its latest create at or before `t` is later than its
/// latest remove at or before `t`.
#[derive(Debug, Clone, Default)]
pub struct FileLifetimes {
    history: HashMap<String, (Vec<Timestamp>, Vec<Timestamp>)>,
}

impl FileLifetimes {
    pub fn from_edges<'a, I: IntoIterator<Item = &'a Edge>>(edges: I) -> Self {
        let mut history: HashMap<String, (Vec<Timestamp>, Vec<Timestamp>)> = HashMap::new();
        for e in edges {
            match e.relation {
                RelationType::Create => history.entry(e.dst.id.clone()).or_default().0.push(e.at),
                RelationType::Remove => history.entry(e.dst.id.clone()).or_default().1.push(e.at),
                _ => {}
            }
        }
        Self { history }
    }

    pub fn exists(&self, file: &str, t: Timestamp) -> bool {
        let Some((creates, removes)) = self.history.get(file) else {
            return true;
        };
        let created = if creates.is_empty() {
            Some(Timestamp::MIN)
        } else {
            creates.iter().copied().filter(|&c| c <= t).max()
        };
        let Some(created) = created else {
            return false;
        };
        match removes.iter().copied().filter(|&r| r <= t).max() {
            Some(r) => r < created,
            None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationConfig {
    pub k: usize,
    pub tau: f64,
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self { k: 3, tau: 0.05 }
    }
}

/// File document text: the file's content (when supplied) plus its path.
pub fn file_documents(corpus: &Corpus) -> BTreeMap<String, String> {
    let mut docs: BTreeMap<String, String> = BTreeMap::new();
    for c in corpus.commits() {
        for fc in &c.file_changes {
            docs.entry(fc.path.clone())
                .or_insert_with(|| fc.path.clone());
        }
    }
    for f in corpus.files() {
        docs.insert(f.path.clone(), format!("{}\n{}", f.content, f.path));
    }
    docs
}

/// Every relation over the closed issues in `labeled`, sorted.
///
/// Issues labeled from linked commits get traced Similar edges; every issue
/// gets textual Similar edges against the files existing at its creation.
pub fn extract_relations(
    corpus: &Corpus,
    labeled: &[LabeledIssue],
    config: RelationConfig,
) -> Vec<Edge> {
    let mut edges = extract_report_comment(labeled, corpus.comments());
    let cr = extract_create_remove(corpus.commits());
    let lifetimes = FileLifetimes::from_edges(&cr);
    edges.extend(cr);

    let index = build_tfidf_index(file_documents(corpus));
    for l in labeled {
        if l.rule == LabelRule::LinkedCommits {
            let commits: Vec<&CommitRecord> = l
                .traced_commits
                .iter()
                .filter_map(|sha| corpus.commit(sha))
                .collect();
            if let Ok(traced) = similar_edges_traced(l, &commits) {
                edges.extend(traced);
            }
        }
        let at = l.issue.created_at;
        edges.extend(similar_edges_text_filtered(
            &l.issue,
            &index,
            config.k,
            config.tau,
            |f| lifetimes.exists(f, at),
        ));
    }
    sort_edges(&mut edges);
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FileChange, IssueState};

    fn issue(id: &str, reporter: &str, text: &str) -> IssueRecord {
        IssueRecord {
            issue_id: id.into(),
            title: text.into(),
            body: String::new(),
            reporter: reporter.into(),
            created_at: 10,
            closed_at: Some(20),
            closed_by: Some("z".into()),
            original_assignees: BTreeSet::new(),
            state: IssueState::Closed,
        }
    }

    fn labeled(i: IssueRecord) -> LabeledIssue {
        LabeledIssue {
            issue: i,
            fixers: BTreeSet::new(),
            rule: LabelRule::Unlabeled,
            traced_commits: vec![],
        }
    }

    fn comment(i: &str, a: &str, t: i64) -> CommentRecord {
        CommentRecord {
            issue_id: i.into(),
            author: a.into(),
            created_at: t,
        }
    }

    fn commit(author: &str, at: i64, changes: &[(&str, ChangeType)]) -> CommitRecord {
        CommitRecord {
            sha: format!("{author}{at}"),
            author: author.into(),
            committed_at: at,
            file_changes: changes
                .iter()
                .map(|&(p, change_type)| FileChange {
                    path: p.into(),
                    change_type,
                })
                .collect(),
        }
    }

    #[test]
    fn comments_are_deduplicated_per_developer() {
        let l = [labeled(issue("i", "A", ""))];
        let cs = [
            comment("i", "B", 15),
            comment("i", "B", 12),
            comment("i", "C", 13),
        ];
        let edges = extract_report_comment(&l, &cs);
        let got: Vec<_> = edges
            .iter()
            .map(|e| (e.relation, e.dst.id.as_str(), e.at))
            .collect();
        assert_eq!(
            got,
            [
                (RelationType::Report, "A", 10),
                (RelationType::Comment, "B", 12),
                (RelationType::Comment, "C", 13)
            ]
        );
        assert_eq!(extract_report_comment(&l, &[]).len(), 1);
        assert!(extract_report_comment(&[], &cs).is_empty());
    }

    #[test]
    fn only_create_and_remove_produce_edges() {
        use ChangeType::*;
        let cs = [commit(
            "D",
            5,
            &[("f1", Created), ("f2", Modified), ("f3", Removed)],
        )];
        let e = extract_create_remove(&cs);
        assert_eq!(e.len(), 2);
        assert!(e
            .iter()
            .any(|e| e.relation == RelationType::Create && e.dst.id == "f1"));
        assert!(e
            .iter()
            .any(|e| e.relation == RelationType::Remove && e.dst.id == "f3"));

        let cs = [
            commit("D", 9, &[("f1", Created)]),
            commit("D", 4, &[("f1", Created)]),
        ];
        let e = extract_create_remove(&cs);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].at, 4);
        assert!(extract_create_remove(&[commit("D", 1, &[("x", Modified)])]).is_empty());
    }

    #[test]
    fn textual_similarity_cases() {
        let idx = build_tfidf_index([
            ("a", "socket buffer overflow timeout retry"),
            ("b", "render pixel shader socket"),
            ("c", "unrelated words here"),
        ]);
        assert!(similar_edges_text(&issue("i", "r", "zzz qqq"), &idx, 3, 0.05).is_empty());

        let same = similar_edges_text(
            &issue("i", "r", "render pixel shader socket"),
            &idx,
            3,
            0.05,
        );
        assert_eq!(same[0].dst.id, "b");
        assert!((same[0].weight - 1.0).abs() < 1e-9);

        let e = similar_edges_text(
            &issue("i", "r", "socket buffer overflow timeout retry"),
            &idx,
            3,
            0.0,
        );
        let ids: Vec<_> = e.iter().map(|e| e.dst.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(e
            .iter()
            .all(|e| e.provenance == Provenance::Textual && e.at == 10));
    }

    #[test]
    fn traced_edges_are_a_file_set() {
        use ChangeType::*;
        let mut l = labeled(issue("i", "r", ""));
        l.rule = LabelRule::LinkedCommits;
        let c1 = commit("D", 15, &[("f1", Modified), ("f2", Created)]);
        let c2 = commit("D", 16, &[("f2", Modified), ("f2", Removed)]);
        let late = commit("D", 25, &[("f9", Modified)]);
        let e = similar_edges_traced(&l, &[&c1, &c2, &late]).unwrap();
        let ids: Vec<_> = e.iter().map(|e| e.dst.id.as_str()).collect();
        assert_eq!(ids, ["f1", "f2"]);
        assert!(e
            .iter()
            .all(|e| e.weight == 1.0 && e.provenance == Provenance::Traced));
        assert!(similar_edges_traced(&l, &[]).is_err());
        assert!(similar_edges_traced(&l, &[&late]).is_err());
    }

    #[test]
    fn file_lifetimes() {
        use ChangeType::*;
        let e = extract_create_remove(&[
            commit("A", 10, &[("f", Created)]),
            commit("B", 20, &[("f", Removed)]),
            commit("C", 30, &[("f", Created)]),
        ]);
        let lt = FileLifetimes::from_edges(&e);
        assert!(!lt.exists("f", 9));
        assert!(lt.exists("f", 10));
        assert!(!lt.exists("f", 20));
        assert!(lt.exists("f", 31));
        assert!(lt.exists("never-created", i64::MIN));
    }
}
