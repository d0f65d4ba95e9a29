use std::collections::{BTreeMap, BTreeSet};

use super::records::*;
use super::{Corpus, CorpusError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DevStats {
    pub commit_count: u64,
    pub closed_issue_count: u64,
}

pub type DeveloperStats = BTreeMap<DeveloperId, DevStats>;

/// Commit and closure counts for every developer mentioned in the corpus.
pub fn developer_stats(corpus: &Corpus) -> DeveloperStats {
    let mut stats: DeveloperStats = corpus
        .developers()
        .into_iter()
        .map(|d| (d, DevStats::default()))
        .collect();
    for c in corpus.commits() {
        stats.entry(c.author.clone()).or_default().commit_count += 1;
    }
    for i in corpus.issues() {
        if let Some(closer) = &i.closed_by {
            stats.entry(closer.clone()).or_default().closed_issue_count += 1;
        }
    }
    stats
}

/// Which rule produced an issue's fixer set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelRule {
    /// Authors of linked commits made before the issue closed.
    LinkedCommits,
    /// No usable commit; the closer has more commits than closed issues.
    Closer,
    /// Neither rule applied.
    Unlabeled,
}

impl LabelRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelRule::LinkedCommits => "commits",
            LabelRule::Closer => "closer",
            LabelRule::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "commits" => Some(LabelRule::LinkedCommits),
            "closer" => Some(LabelRule::Closer),
            "unlabeled" => Some(LabelRule::Unlabeled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabel {
    pub fixers: BTreeSet<DeveloperId>,
    pub rule: LabelRule,
    /// Shas of the pre-close linked commits behind `LinkedCommits`, sorted.
    pub traced_commits: Vec<String>,
}

/// Repairs the fixer label of a closed issue from its event trail.
///
/// Every linked commit with `committed_at < closed_at` contributes its
/// author. When none exists the closer is used, but only if they authored
/// strictly more commits than issues they closed.
pub fn relabel_issue<'a, E, F>(
    issue: &IssueRecord,
    linked_events: E,
    commit_lookup: F,
    stats: &DeveloperStats,
) -> Result<Relabel, CorpusError>
where
    E: IntoIterator<Item = &'a EventRecord>,
    F: Fn(&str) -> Option<&'a CommitRecord>,
{
    let closed_at = match (issue.state, issue.closed_at) {
        (IssueState::Closed, Some(t)) => t,
        _ => return Err(CorpusError::OpenIssue(issue.issue_id.clone())),
    };

    let mut fixers = BTreeSet::new();
    let mut traced = BTreeSet::new();
    for ev in linked_events {
        let Some(sha) = ev.commit_sha.as_deref() else {
            continue;
        };
        if let Some(commit) = commit_lookup(sha) {
            if commit.committed_at < closed_at {
                fixers.insert(commit.author.clone());
                traced.insert(commit.sha.clone());
            }
        }
    }
    if !fixers.is_empty() {
        return Ok(Relabel {
            fixers,
            rule: LabelRule::LinkedCommits,
            traced_commits: traced.into_iter().collect(),
        });
    }

    if let Some(closer) = &issue.closed_by {
        let s = stats.get(closer).copied().unwrap_or_default();
        if s.commit_count > s.closed_issue_count {
            return Ok(Relabel {
                fixers: BTreeSet::from([closer.clone()]),
                rule: LabelRule::Closer,
                traced_commits: Vec::new(),
            });
        }
    }
    Ok(Relabel {
        fixers: BTreeSet::new(),
        rule: LabelRule::Unlabeled,
        traced_commits: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledIssue {
    pub issue: IssueRecord,
    pub fixers: BTreeSet<DeveloperId>,
    pub rule: LabelRule,
    pub traced_commits: Vec<String>,
}

impl LabeledIssue {
    pub fn is_labeled(&self) -> bool {
        !self.fixers.is_empty()
    }

    pub fn id(&self) -> &str {
        &self.issue.issue_id
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RelabelSummary {
    pub labeled: usize,
    pub unlabeled: usize,
    pub multi_fixer: usize,
    pub by_commits: usize,
    pub by_closer: usize,
}

/// One [`LabeledIssue`] per closed issue, in corpus order.
pub fn relabel_corpus(corpus: &Corpus) -> (Vec<LabeledIssue>, RelabelSummary) {
    let stats = developer_stats(corpus);
    let mut out = Vec::new();
    let mut summary = RelabelSummary::default();
    for issue in corpus.issues().iter().filter(|i| i.is_closed()) {
        let r = relabel_issue(
            issue,
            corpus.events_for(&issue.issue_id),
            |sha| corpus.commit(sha),
            &stats,
        )
        .expect("closed issue");
        match r.rule {
            LabelRule::LinkedCommits => summary.by_commits += 1,
            LabelRule::Closer => summary.by_closer += 1,
            LabelRule::Unlabeled => {}
        }
        if r.fixers.is_empty() {
            summary.unlabeled += 1;
        } else {
            summary.labeled += 1;
        }
        if r.fixers.len() > 1 {
            summary.multi_fixer += 1;
        }
        out.push(LabeledIssue {
            issue: issue.clone(),
            fixers: r.fixers,
            rule: r.rule,
            traced_commits: r.traced_commits,
        });
    }
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed(id: &str, closed_at: i64, closed_by: &str) -> IssueRecord {
        IssueRecord {
            issue_id: id.into(),
            title: String::new(),
            body: String::new(),
            reporter: "r".into(),
            created_at: 0,
            closed_at: Some(closed_at),
            closed_by: Some(closed_by.into()),
            original_assignees: BTreeSet::new(),
            state: IssueState::Closed,
        }
    }

    fn commit(sha: &str, author: &str, at: i64) -> CommitRecord {
        CommitRecord {
            sha: sha.into(),
            author: author.into(),
            committed_at: at,
            file_changes: vec![],
        }
    }

    fn link(issue: &str, sha: &str) -> EventRecord {
        EventRecord {
            issue_id: issue.into(),
            actor: "bot".into(),
            event_type: "referenced".into(),
            created_at: 0,
            commit_sha: Some(sha.into()),
        }
    }

    fn stats(entries: &[(&str, u64, u64)]) -> DeveloperStats {
        entries
            .iter()
            .map(|&(d, c, k)| {
                (
                    d.to_string(),
                    DevStats {
                        commit_count: c,
                        closed_issue_count: k,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn post_close_commit_is_ignored() {
        let commits = [commit("c1", "A", 3), commit("c2", "B", 6)];
        let events = [link("i", "c1"), link("i", "c2")];
        let r = relabel_issue(
            &closed("i", 5, "Z"),
            &events,
            |s| commits.iter().find(|c| c.sha == s),
            &DeveloperStats::new(),
        )
        .unwrap();
        assert_eq!(r.fixers, BTreeSet::from(["A".to_string()]));
        assert_eq!(r.rule, LabelRule::LinkedCommits);
        assert_eq!(r.traced_commits, vec!["c1".to_string()]);
    }

    #[test]
    fn closer_fallback_depends_on_commit_count() {
        let none: [CommitRecord; 0] = [];
        let lookup = |s: &str| none.iter().find(|c| c.sha == s);
        let r = relabel_issue(&closed("i", 5, "C"), [], lookup, &stats(&[("C", 12, 5)])).unwrap();
        assert_eq!(r.fixers, BTreeSet::from(["C".to_string()]));
        assert_eq!(r.rule, LabelRule::Closer);
        let r = relabel_issue(&closed("i", 5, "C"), [], lookup, &stats(&[("C", 3, 5)])).unwrap();
        assert!(r.fixers.is_empty());
        assert_eq!(r.rule, LabelRule::Unlabeled);
    }

    #[test]
    fn open_issue_is_a_precondition_error() {
        let mut i = closed("i", 5, "C");
        i.state = IssueState::Open;
        i.closed_at = None;
        let none: [CommitRecord; 0] = [];
        assert!(matches!(
            relabel_issue(
                &i,
                [],
                |s| none.iter().find(|c| c.sha == s),
                &DeveloperStats::new()
            ),
            Err(CorpusError::OpenIssue(_))
        ));
    }
}
