use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use htgtriage_core::autograd::{read_params, write_params, Checkpoint};
use htgtriage_core::corpus::{
    cohens_kappa, load_corpus, read_labels, sample_size, write_labels, Confidence, Corpus,
    IssueRecord, RecordStreams,
};
use htgtriage_core::evaluation::activity_table;
use htgtriage_core::htg::{hex_sha256, read_htg, slice_timeline, write_htg, Htg};
use htgtriage_core::pipeline::{self, fit, rank_adhoc, sweep_window, RunConfig, TrainedModel};
use htgtriage_core::relations::{extract_relations, read_edges, write_edges};
use htgtriage_core::synth::{generate_synthetic, DriftEvent, SynthSpec};
use htgtriage_core::training::write_history;

use super::*;

/// Checkpoint directory entries written by `train`.
const BEST: &str = "best";
const LAST: &str = "last";
const HISTORY: &str = "history.tsv";
const RUN_CONFIG: &str = "run.conf";

pub fn run(cli: Cli) -> Result<()> {
    let mut o = Overrides::default();
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
        o.push(k.trim(), v.trim());
    }
    let config_file = cli.config.as_deref();
    match cli.command {
        Command::Ingest(a) => {
            o.path("corpus", &a.out);
            ingest(&o.resolve(config_file)?, &a)
        }
        Command::Relabel(a) => {
            o.path("corpus", &a.corpus);
            o.path("labels", &a.out);
            relabel(&o.resolve(config_file)?)
        }
        Command::ExtractRelations(a) => {
            o.path("corpus", &a.corpus);
            o.opt("k", &a.k);
            o.opt("tau", &a.tau);
            o.path("edges", &a.out);
            extract(&o.resolve(config_file)?)
        }
        Command::BuildGraph(a) => {
            o.path("edges", &a.edges);
            o.path("labels", &a.labels);
            o.opt("slices", &a.slices);
            o.path("graph", &a.out);
            build_graph(&o.resolve(config_file)?)
        }
        Command::Train(a) => {
            o.path("graph", &a.graph);
            o.opt("tw", &a.tw);
            o.opt("seed", &a.seed);
            o.path("ckpt", &a.out);
            train(&o.resolve(config_file)?)
        }
        Command::Evaluate(a) => {
            o.path("graph", &a.graph);
            o.path("ckpt", &a.ckpt);
            o.opt("topn", &a.topn);
            o.path("report", &a.report);
            o.opt("pairing", &a.pairing);
            if a.rankings {
                o.push("rankings", "true");
            }
            o.path("corpus", &a.corpus);
            evaluate(&o.resolve(config_file)?, a.corpus.is_some())
        }
        Command::Recommend(a) => {
            o.path("graph", &a.graph);
            o.path("ckpt", &a.ckpt);
            o.path("corpus", &a.corpus);
            recommend(&o.resolve(config_file)?, &a.issue_file, a.top)
        }
        Command::SweepWindow(a) => {
            o.path("graph", &a.graph);
            o.opt("seed", &a.seed);
            sweep(&o.resolve(config_file)?, &a)
        }
        Command::Synth(a) => {
            o.path("corpus", &a.out);
            synth(&o.resolve(config_file)?, &a)
        }
        Command::Stats(a) => {
            o.path("corpus", &a.corpus);
            stats(&o.resolve(config_file)?, a.graph.as_deref(), &a)
        }
    }
}

/// Config overrides in application order.
#[derive(Default)]
struct Overrides(Vec<(String, String)>);

impl Overrides {
    fn push(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }

    fn opt<T: ToString>(&mut self, k: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.push(k, v.to_string());
        }
    }

    fn path(&mut self, k: &str, v: &Option<PathBuf>) {
        if let Some(v) = v {
            self.push(k, v.display());
        }
    }

    fn resolve(&self, file: Option<&Path>) -> Result<RunConfig> {
        Ok(RunConfig::resolve(
            file,
            self.0.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        )?)
    }
}

/// Fails with a message naming the command that produces `path`.
fn require(path: &Path, what: &str, producer: &str) -> Result<()> {
    if !path.exists() {
        bail!(
            "{what} `{}` not found; create it with `htgtriage {producer}`",
            path.display()
        );
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_corpus_dir(dir: &Path) -> Result<Corpus> {
    require(
        &dir.join("issues.jsonl"),
        "corpus",
        "ingest` or `htgtriage synth",
    )?;
    Corpus::read_dir(dir).with_context(|| format!("loading corpus {}", dir.display()))
}

fn load_graph(path: &Path) -> Result<Htg> {
    require(path, "graph file", "build-graph")?;
    read_htg(open(path)?).with_context(|| format!("reading graph {}", path.display()))
}

/// A checkpoint directory stands for its best parameters.
fn checkpoint_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(BEST)
    } else {
        path.to_path_buf()
    }
}

fn load_model(config: &RunConfig, htg: &Htg) -> Result<(TrainedModel, PathBuf)> {
    let path = checkpoint_file(&config.ckpt);
    require(&path, "checkpoint", "train")?;
    let ckpt = read_params(open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    let model = TrainedModel::from_checkpoint(ckpt, htg, config)?;
    Ok((model, path))
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex_sha256(&bytes))
}

fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = create(path)?;
    write_params(&mut w, ckpt)?;
    w.flush()?;
    Ok(())
}

fn ingest(config: &RunConfig, a: &IngestArgs) -> Result<()> {
    for p in [&a.issues, &a.comments, &a.events, &a.commits] {
        if !p.exists() {
            bail!("record stream `{}` not found", p.display());
        }
    }
    let corpus = load_corpus(RecordStreams {
        issues: open(&a.issues)?,
        comments: open(&a.comments)?,
        events: open(&a.events)?,
        commits: open(&a.commits)?,
        files: a.files.as_deref().map(open).transpose()?,
    })?;
    corpus.write_dir(&config.corpus)?;
    let v = corpus.validation();
    println!(
        "corpus {}: {} issues, {} comments, {} events, {} commits, {} dangling commit refs",
        config.corpus.display(),
        corpus.issue_count(),
        corpus.comments().len(),
        corpus.events().len(),
        corpus.commit_count(),
        v.dangling_commit_refs.len()
    );
    Ok(())
}

fn relabel(config: &RunConfig) -> Result<()> {
    let corpus = load_corpus_dir(&config.corpus)?;
    let labeled = pipeline::relabel(&corpus);
    let mut w = create(&config.labels)?;
    write_labels(&mut w, &labeled.rows)?;
    w.flush()?;
    let s = &labeled.summary;
    println!(
        "labels {}: {} labeled ({} by commits, {} by closer, {} multi-fixer), {} unlabeled",
        config.labels.display(),
        s.labeled,
        s.by_commits,
        s.by_closer,
        s.multi_fixer,
        s.unlabeled
    );
    Ok(())
}

fn extract(config: &RunConfig) -> Result<()> {
    let corpus = load_corpus_dir(&config.corpus)?;
    let labeled = pipeline::relabel(&corpus);
    let edges = extract_relations(&corpus, &labeled.issues, config.relations);
    let mut w = create(&config.edges)?;
    write_edges(&mut w, &edges)?;
    w.flush()?;
    println!("edges {}: {}", config.edges.display(), edges.len());
    Ok(())
}

fn build_graph(config: &RunConfig) -> Result<()> {
    require(&config.edges, "edge list", "extract-relations")?;
    require(&config.labels, "label table", "relabel")?;
    let edges = read_edges(open(&config.edges)?)?;
    let labels = read_labels(open(&config.labels)?)?;
    let htg = Htg::from_labels(&edges, &labels, config.slices)?;
    let mut w = create(&config.graph)?;
    write_htg(&mut w, &htg)?;
    w.flush()?;
    let s = htg.stats();
    println!(
        "graph {}: {} slices, {} nodes, {} edges, {} late comments dropped",
        config.graph.display(),
        htg.t(),
        htg.node_count(),
        htg.edge_count(),
        s.late_comments_open + s.late_comments_closed
    );
    Ok(())
}

fn train(config: &RunConfig) -> Result<()> {
    let htg = load_graph(&config.graph)?;
    let fitted = fit(&htg, config)?;
    let dir = &config.ckpt;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let h = &fitted.history;
    let extra = [("best_epoch", h.best_epoch.to_string())];
    let m = &fitted.model;
    write_checkpoint(&dir.join(BEST), &m.to_checkpoint(&htg, &m.params, &extra))?;
    write_checkpoint(
        &dir.join(LAST),
        &m.to_checkpoint(&htg, &fitted.last, &extra),
    )?;
    let mut w = create(&dir.join(HISTORY))?;
    write_history(&mut w, h)?;
    w.flush()?;
    fs::write(dir.join(RUN_CONFIG), config.to_text())?;
    let best = h.best().map_or(f64::NAN, |e| e.validation_loss);
    println!(
        "checkpoint {}: {} epochs, best epoch {} (validation loss {best:.6}){}",
        dir.display(),
        h.epochs.len(),
        h.best_epoch,
        h.aborted
            .as_deref()
            .map_or(String::new(), |r| format!(", aborted: {r}"))
    );
    Ok(())
}

fn evaluate(config: &RunConfig, with_corpus: bool) -> Result<()> {
    let htg = load_graph(&config.graph)?;
    let (model, ckpt_path) = load_model(config, &htg)?;
    let mut inputs = vec![
        ("graph".to_string(), file_hash(&config.graph)?),
        ("ckpt".to_string(), file_hash(&ckpt_path)?),
    ];
    let corpus = if with_corpus {
        let c = load_corpus_dir(&config.corpus)?;
        for stream in ["issues", "comments", "events", "commits"] {
            let p = config.corpus.join(format!("{stream}.jsonl"));
            inputs.push((format!("corpus.{stream}"), file_hash(&p)?));
        }
        Some(c)
    } else {
        None
    };
    let report = pipeline::evaluate(&htg, &model, config, corpus.as_ref(), &inputs)?;
    let mut w = create(&config.report)?;
    w.write_all(report.to_text().as_bytes())?;
    w.flush()?;
    let get = |k: &str| report.get_f64("metrics", k).unwrap_or(f64::NAN);
    println!(
        "report {}: top1 {:.4}, mrr {:.4} (baseline top1 {:.4}, mrr {:.4})",
        config.report.display(),
        get("model.top1"),
        get("model.mrr"),
        get("baseline.top1"),
        get("baseline.mrr")
    );
    Ok(())
}

fn recommend(config: &RunConfig, issue_file: &Path, top: usize) -> Result<()> {
    if !issue_file.exists() {
        bail!("issue file `{}` not found", issue_file.display());
    }
    let issue: IssueRecord = serde_json::from_reader(open(issue_file)?)
        .with_context(|| format!("parsing issue {}", issue_file.display()))?;
    let htg = load_graph(&config.graph)?;
    let corpus = load_corpus_dir(&config.corpus)?;
    let (model, _) = load_model(config, &htg)?;
    let ranked = rank_adhoc(&model, &htg, &corpus, &issue, config.relations)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "rank\tdeveloper\tscore")?;
    for (i, (dev, score)) in ranked.iter().take(top).enumerate() {
        writeln!(out, "{}\t{dev}\t{score:.6}", i + 1)?;
    }
    Ok(())
}

fn sweep(config: &RunConfig, a: &SweepArgs) -> Result<()> {
    let htg = load_graph(&config.graph)?;
    let rows = sweep_window(&htg, config, &a.tws, a.parallel)?;
    let mut text = String::from("tw");
    for n in &config.topn {
        text.push_str(&format!("\ttop{n}"));
    }
    text.push_str("\tmrr\tepochs\tbest_epoch\n");
    for r in &rows {
        text.push_str(&r.tw.to_string());
        for (_, v) in &r.top {
            text.push_str(&format!("\t{v:.4}"));
        }
        text.push_str(&format!("\t{:.4}\t{}\t{}\n", r.mrr, r.epochs, r.best_epoch));
    }
    print!("{text}");
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn parse_drift(s: &str) -> Result<DriftEvent> {
    let parts: Vec<&str> = s.split(':').collect();
    let [m, d, sl] = parts[..] else {
        bail!("--drift expects MODULE:DEVELOPER:SLICE, got `{s}`");
    };
    let n = |x: &str| x.parse::<usize>().with_context(|| format!("--drift `{s}`"));
    Ok(DriftEvent {
        module: n(m)?,
        developer: n(d)?,
        slice: n(sl)?,
    })
}

fn synth(config: &RunConfig, a: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec {
        modules: a.modules,
        devs_per_module: a.devs_per_module,
        issues: a.issues,
        files_per_module: a.files_per_module,
        vocab_per_module: a.vocab_per_module,
        slices: a.slices,
        drift: a
            .drift
            .iter()
            .map(|d| parse_drift(d))
            .collect::<Result<_>>()?,
        seed: a.seed,
    };
    if a.drift_fixture {
        spec.drift = SynthSpec::drift_fixture(a.seed)
            .drift
            .into_iter()
            .filter(|d| d.module < spec.modules)
            .collect();
    }
    let corpus = generate_synthetic(&spec)?;
    corpus.write_dir(&config.corpus)?;
    println!(
        "corpus {}: {} issues, {} commits, {} developers",
        config.corpus.display(),
        corpus.issue_count(),
        corpus.commit_count(),
        corpus.developers().len()
    );
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

fn stats(config: &RunConfig, graph: Option<&Path>, a: &StatsArgs) -> Result<()> {
    let corpus = load_corpus_dir(&config.corpus)?;
    let labeled = pipeline::relabel(&corpus);
    let s = &labeled.summary;
    let mut out = std::io::stdout().lock();
    writeln!(out, "[corpus]")?;
    writeln!(out, "issues = {}", corpus.issue_count())?;
    writeln!(out, "closed = {}", s.labeled + s.unlabeled)?;
    writeln!(out, "comments = {}", corpus.comments().len())?;
    writeln!(out, "events = {}", corpus.events().len())?;
    writeln!(out, "commits = {}", corpus.commit_count())?;
    writeln!(out, "developers = {}", corpus.developers().len())?;
    writeln!(
        out,
        "dangling_commit_refs = {}",
        corpus.validation().dangling_commit_refs.len()
    )?;
    writeln!(out, "[labels]")?;
    writeln!(out, "labeled = {}", s.labeled)?;
    writeln!(out, "unlabeled = {}", s.unlabeled)?;
    writeln!(out, "by_commits = {}", s.by_commits)?;
    writeln!(out, "by_closer = {}", s.by_closer)?;
    writeln!(out, "multi_fixer = {}", s.multi_fixer)?;
    let confidence = Confidence::from_level(a.confidence)
        .ok_or_else(|| anyhow!("--confidence must be 0.90, 0.95 or 0.99"))?;
    if !(a.margin > 0.0 && a.margin < 1.0) {
        bail!("--margin must be in (0, 1)");
    }
    if s.labeled > 0 {
        let n = sample_size(s.labeled as u64, confidence, a.margin);
        writeln!(out, "audit_sample = {n}")?;
    }
    if let [x, y] = &a.kappa[..] {
        let k = cohens_kappa(&read_lines(x)?, &read_lines(y)?)?;
        writeln!(out, "kappa = {k:.6}")?;
    }

    if !labeled.rows.is_empty() {
        let stages = slice_timeline(
            labeled
                .rows
                .iter()
                .map(|l| (l.issue_id.as_str(), l.created_at)),
            config.activity_stages.min(labeled.rows.len()),
        )?;
        let starts: Vec<i64> = stages.slices().iter().map(|s| s.start).collect();
        let table = activity_table(corpus.commits(), &starts);
        writeln!(out, "[activity]")?;
        let header: Vec<String> = (1..=starts.len()).map(|s| format!("stage{s}")).collect();
        writeln!(out, "developer\t{}", header.join("\t"))?;
        let totals: Vec<String> = table
            .commits_per_stage
            .iter()
            .map(usize::to_string)
            .collect();
        writeln!(out, "commits\t{}", totals.join("\t"))?;
        for (dev, pct) in &table.rows {
            let cells: Vec<String> = pct
                .iter()
                .map(|p| p.map_or("-".into(), |v| format!("{v:.1}")))
                .collect();
            writeln!(out, "{dev}\t{}", cells.join("\t"))?;
        }
    }

    if let Some(path) = graph {
        let htg = load_graph(path)?;
        writeln!(out, "[graph]")?;
        writeln!(out, "slice\tissues\tnodes\tedges")?;
        for snap in htg.snapshots() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                snap.index,
                snap.issues.len(),
                snap.nodes.len(),
                snap.edges.len()
            )?;
        }
    }
    Ok(())
}
