//! Seeded synthetic issue trackers with planted module structure and
//! optional developer turnover.
//!
//! Every module owns a disjoint vocabulary and a set of files. Each developer
//! slot of a module works in its own slice of that vocabulary, so files with
//! the same owner read alike. An issue picks a module and one of its files,
//! borrows most of its words from that file, and is usually fixed by the
//! file's owner through a linked commit that lands before the close. The
//! fixer always comments first; reporters and further commenters mostly
//! come from the same module.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{
    ChangeType, CommentRecord, CommitRecord, Corpus, CorpusError, EventRecord, FileChange,
    FileContent, IssueRecord, IssueState, Timestamp,
};
use crate::htg::hex_sha256;
use crate::rng::{substream, SYNTH};

const HOUR: i64 = 3600;
/// 2020-01-01T00:00:00Z.
const EPOCH: Timestamp = 1_577_836_800;
const ISSUE_SPACING: i64 = 6 * HOUR;
const FILE_WORDS: usize = 8;
const TITLE_WORDS: usize = 3;
const BODY_WORDS: usize = 12;
const FILE_WORD_SHARE: f64 = 0.7;
const OWNER_FIXES: f64 = 0.9;
const MODULE_REPORTER: f64 = 0.7;
const MODULE_COMMENTER: f64 = 0.9;
/// Relative frequency of 0, 1, 2 and 3 commenters per issue. The first
/// commenter is always the eventual fixer.
const COMMENT_WEIGHTS: [u32; 4] = [0, 8, 1, 0];
const NEW_FILE: f64 = 0.03;
const LATE_COMMIT: f64 = 0.05;
const TRIAGED: f64 = 0.03;
pub const TRIAGER: &str = "triager";

/// Developer `developer` of `module` stops all activity once slice `slice`
/// ends; a new developer takes over their files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftEvent {
    pub module: usize,
    pub developer: usize,
    pub slice: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub modules: usize,
    pub devs_per_module: usize,
    pub issues: usize,
    /// Files per module before the first issue.
    pub files_per_module: usize,
    pub vocab_per_module: usize,
    /// Slice count used to place drift events.
    pub slices: usize,
    pub drift: Vec<DriftEvent>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            modules: 5,
            devs_per_module: 2,
            issues: 500,
            files_per_module: 4,
            vocab_per_module: 40,
            slices: 10,
            drift: Vec::new(),
            seed: 7,
        }
    }
}

impl SynthSpec {
    /// Default spec where every module retires its developer 0 after slice 6.
    pub fn drift_fixture(seed: u64) -> Self {
        let base = Self::default();
        Self {
            drift: (0..base.modules)
                .map(|module| DriftEvent {
                    module,
                    developer: 0,
                    slice: 6,
                })
                .collect(),
            seed,
            ..base
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn developer_name(module: usize, k: usize) -> String {
    format!("m{module}-dev{k}")
}

/// Successor introduced by the `j`-th drift event of `module`.
pub fn successor_name(module: usize, j: usize) -> String {
    format!("m{module}-succ{j}")
}

/// Creation time of issue `i` (0-based, in creation order).
fn created_at(i: usize, rng: &mut ChaCha8Rng) -> Timestamp {
    EPOCH + i as i64 * ISSUE_SPACING + rng.gen_range(0..ISSUE_SPACING / 2)
}

/// First issue rank of slice `s + 1`, matching the slicing rule where the
/// first `n mod t` slices hold one extra issue.
fn slice_end_rank(n: usize, t: usize, s: usize) -> usize {
    let (q, r) = (n / t, n % t);
    s * q + s.min(r)
}

fn vocabularies(rng: &mut ChaCha8Rng, modules: usize, size: usize) -> Vec<Vec<String>> {
    const ONSETS: [&str; 16] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st",
    ];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut seen = HashSet::new();
    (0..modules)
        .map(|_| {
            let mut words = Vec::with_capacity(size);
            while words.len() < size {
                let syllables = rng.gen_range(2..=3);
                let w: String = (0..syllables)
                    .map(|_| {
                        format!(
                            "{}{}",
                            ONSETS.choose(rng).unwrap(),
                            VOWELS.choose(rng).unwrap()
                        )
                    })
                    .collect();
                if seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            words
        })
        .collect()
}

struct SynthFile {
    path: String,
    words: Vec<String>,
    created: Timestamp,
    owner: String,
}

struct Builder {
    rng: ChaCha8Rng,
    seed: u64,
    commits: Vec<CommitRecord>,
    files: Vec<FileContent>,
    paths: HashSet<String>,
}

impl Builder {
    fn sha(&mut self) -> String {
        hex_sha256(format!("{}:{}", self.seed, self.commits.len()).as_bytes())[..16].to_string()
    }

    fn commit(&mut self, author: &str, at: Timestamp, changes: Vec<FileChange>) -> String {
        let sha = self.sha();
        self.commits.push(CommitRecord {
            sha: sha.clone(),
            author: author.to_string(),
            committed_at: at,
            file_changes: changes,
        });
        sha
    }

    fn new_file(
        &mut self,
        module: usize,
        vocab: &[String],
        area: &[String],
        owner: &str,
        at: Timestamp,
    ) -> SynthFile {
        let path = loop {
            let a = vocab.choose(&mut self.rng).unwrap();
            let b = vocab.choose(&mut self.rng).unwrap();
            let p = format!("m{module}/{a}_{b}.rs");
            if self.paths.insert(p.clone()) {
                break p;
            }
        };
        let words: Vec<String> = area
            .choose_multiple(&mut self.rng, FILE_WORDS.min(area.len()))
            .cloned()
            .collect();
        self.files.push(FileContent {
            path: path.clone(),
            content: words.join(" "),
        });
        self.commit(
            owner,
            at,
            vec![FileChange {
                path: path.clone(),
                change_type: ChangeType::Created,
            }],
        );
        SynthFile {
            path,
            words,
            created: at,
            owner: owner.to_string(),
        }
    }
}

/// Slice of a module vocabulary worked on by developer slot `k` of `n`.
fn area(vocab: &[String], k: usize, n: usize) -> &[String] {
    let w = vocab.len() / n;
    &vocab[k * w..(k + 1) * w]
}

/// Developer roster of one module over time.
struct Module {
    /// `(developer, active until)`; `None` means never retires.
    devs: Vec<(String, Timestamp, Option<Timestamp>)>,
    files: Vec<SynthFile>,
}

impl Module {
    fn active(&self, at: Timestamp) -> Vec<&str> {
        self.devs
            .iter()
            .filter(|(_, from, until)| *from <= at && until.is_none_or(|u| at < u))
            .map(|(d, _, _)| d.as_str())
            .collect()
    }
}

/// `retired developer → (retirement time, successor)`.
type Retirements = BTreeMap<String, (Timestamp, String)>;

/// Follows retirements from `dev` to whoever covers for them at `at`.
fn resolve(dev: &str, at: Timestamp, retired: &Retirements) -> String {
    let mut d = dev.to_string();
    while let Some((until, next)) = retired.get(&d) {
        if at < *until {
            break;
        }
        d = next.clone();
    }
    d
}

/// Generates a closed-issue corpus from `spec`; identical specs yield
/// identical corpora.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus, SynthError> {
    if spec.modules == 0 || spec.devs_per_module == 0 {
        return Err(SynthError::Spec("no developers".into()));
    }
    if spec.issues == 0
        || spec.files_per_module == 0
        || spec.vocab_per_module < 2
        || spec.vocab_per_module < spec.devs_per_module
    {
        return Err(SynthError::Spec(format!("{spec:?}")));
    }
    for d in &spec.drift {
        if d.module >= spec.modules
            || d.developer >= spec.devs_per_module
            || d.slice == 0
            || d.slice >= spec.slices
            || spec.slices > spec.issues
        {
            return Err(SynthError::Spec(format!("drift event {d:?}")));
        }
    }

    let mut rng = substream(spec.seed, SYNTH);
    let vocab = vocabularies(&mut rng, spec.modules, spec.vocab_per_module);
    let times: Vec<Timestamp> = (0..spec.issues).map(|i| created_at(i, &mut rng)).collect();
    let mut b = Builder {
        rng,
        seed: spec.seed,
        commits: Vec::new(),
        files: Vec::new(),
        paths: HashSet::new(),
    };

    let mut retired = Retirements::new();
    let mut modules: Vec<Module> = (0..spec.modules)
        .map(|m| Module {
            devs: (0..spec.devs_per_module)
                .map(|k| (developer_name(m, k), Timestamp::MIN, None))
                .collect(),
            files: Vec::new(),
        })
        .collect();
    let mut slot: BTreeMap<String, usize> = (0..spec.modules)
        .flat_map(|m| (0..spec.devs_per_module).map(move |k| (developer_name(m, k), k)))
        .collect();
    let mut drift_counts = vec![0usize; spec.modules];
    for d in &spec.drift {
        let until = times[slice_end_rank(spec.issues, spec.slices, d.slice)];
        let module = &mut modules[d.module];
        let old = developer_name(d.module, d.developer);
        let succ = successor_name(d.module, drift_counts[d.module]);
        drift_counts[d.module] += 1;
        if let Some(slot) = module.devs.iter_mut().find(|(x, _, _)| *x == old) {
            slot.2 = Some(slot.2.map_or(until, |u| u.min(until)));
        }
        module.devs.push((succ.clone(), until, None));
        let k = slot[&old];
        slot.insert(succ.clone(), k);
        retired.insert(old, (until, succ));
    }

    for (m, module) in modules.iter_mut().enumerate() {
        for j in 0..spec.files_per_module {
            let owner = developer_name(m, j % spec.devs_per_module);
            let at = EPOCH - 24 * HOUR + (m * spec.files_per_module + j) as i64 * 60;
            let words = area(&vocab[m], j % spec.devs_per_module, spec.devs_per_module);
            let f = b.new_file(m, &vocab[m], words, &owner, at);
            module.files.push(f);
        }
    }

    let mut issues = Vec::with_capacity(spec.issues);
    let mut comments = Vec::new();
    let mut events = Vec::new();
    let width = spec.issues.to_string().len();
    for (i, &created) in times.iter().enumerate() {
        let id = format!("{:0width$}", i + 1);
        let m = b.rng.gen_range(0..spec.modules);
        let module = &modules[m];
        let existing: Vec<usize> = (0..module.files.len())
            .filter(|&f| module.files[f].created < created)
            .collect();
        let fi = *existing
            .choose(&mut b.rng)
            .expect("initial files predate issues");
        let file = &module.files[fi];

        let words = |rng: &mut ChaCha8Rng, n: usize| -> String {
            (0..n)
                .map(|_| {
                    if rng.gen_bool(FILE_WORD_SHARE) {
                        file.words.choose(rng).unwrap().as_str()
                    } else {
                        vocab[m].choose(rng).unwrap().as_str()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let title = words(&mut b.rng, TITLE_WORDS);
        let body = words(&mut b.rng, BODY_WORDS);

        let active = module.active(created);
        let owner = resolve(&file.owner, created, &retired);
        let mut fixer = owner.clone();
        if !b.rng.gen_bool(OWNER_FIXES) {
            let others: Vec<&str> = active.iter().copied().filter(|d| *d != owner).collect();
            if let Some(o) = others.choose(&mut b.rng) {
                fixer = o.to_string();
            }
        }
        let everyone: Vec<&str> = modules.iter().flat_map(|x| x.active(created)).collect();
        let pick = |rng: &mut ChaCha8Rng, local: f64| -> String {
            let pool = if rng.gen_bool(local) {
                &active
            } else {
                &everyone
            };
            pool.choose(rng).unwrap().to_string()
        };
        let reporter = pick(&mut b.rng, MODULE_REPORTER);
        let delay = b.rng.gen_range(2 * HOUR..48 * HOUR);
        let n_comments = WeightedIndex::new(COMMENT_WEIGHTS)
            .unwrap()
            .sample(&mut b.rng);
        let mut commenters: Vec<String> = Vec::with_capacity(n_comments);
        for k in 0..n_comments {
            commenters.push(match k {
                0 => fixer.clone(),
                _ => pick(&mut b.rng, MODULE_COMMENTER),
            });
        }
        for c in commenters {
            let at = created + b.rng.gen_range(600..delay);
            comments.push(CommentRecord {
                issue_id: id.clone(),
                author: resolve(&c, at, &retired),
                created_at: at,
            });
        }

        let triaged = b.rng.gen_bool(TRIAGED);
        let late = b.rng.gen_bool(LATE_COMMIT);
        let new_file = b.rng.gen_bool(NEW_FILE);
        let fix_at = created + delay;
        let fixer = resolve(&fixer, fix_at, &retired);
        let (closed_at, closed_by) = if triaged {
            (fix_at, TRIAGER.to_string())
        } else {
            let close = if late {
                fix_at - b.rng.gen_range(600..HOUR)
            } else {
                fix_at + b.rng.gen_range(600..2 * HOUR)
            };
            let path = file.path.clone();
            let sha = b.commit(
                &fixer,
                fix_at,
                vec![FileChange {
                    path,
                    change_type: ChangeType::Modified,
                }],
            );
            events.push(EventRecord {
                issue_id: id.clone(),
                actor: fixer.clone(),
                event_type: "referenced".into(),
                created_at: fix_at,
                commit_sha: Some(sha),
            });
            (close, fixer.clone())
        };
        events.push(EventRecord {
            issue_id: id.clone(),
            actor: closed_by.clone(),
            event_type: "closed".into(),
            created_at: closed_at,
            commit_sha: None,
        });
        issues.push(IssueRecord {
            issue_id: id,
            title,
            body,
            reporter: resolve(&reporter, created, &retired),
            created_at: created,
            closed_at: Some(closed_at),
            closed_by: Some(closed_by),
            original_assignees: BTreeSet::new(),
            state: IssueState::Closed,
        });
        if new_file && !triaged {
            let words = area(&vocab[m], slot[&fixer], spec.devs_per_module);
            let f = b.new_file(m, &vocab[m], words, &fixer, fix_at - 60);
            modules[m].files.push(f);
        }
    }

    Ok(Corpus::from_records(
        issues, comments, events, b.commits, b.files,
    )?)
}
