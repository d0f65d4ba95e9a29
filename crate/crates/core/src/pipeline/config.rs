//! Flat `key = value` run configuration.
//!
//! Resolution order: built-in defaults, then a config file, then explicit
//! overrides. Unknown keys are errors so typos cannot pass silently.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PipelineError;
use crate::htg::SplitRatios;
use crate::model::ModelConfig;
use crate::relations::RelationConfig;
use crate::training::TrainConfig;

/// Environment variable naming a config file used when none is given.
pub const CONFIG_ENV: &str = "HTGTRIAGE_CONFIG";

/// Which per-issue value pairs the model with the baseline in the
/// significance tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    ReciprocalRank,
    Top1,
}

impl Pairing {
    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::ReciprocalRank => "reciprocal_rank",
            Pairing::Top1 => "top1",
        }
    }
}

impl FromStr for Pairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reciprocal_rank" => Ok(Pairing::ReciprocalRank),
            "top1" => Ok(Pairing::Top1),
            _ => Err(format!("unknown pairing `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    pub edges: PathBuf,
    pub graph: PathBuf,
    pub ckpt: PathBuf,
    pub report: PathBuf,
    pub relations: RelationConfig,
    pub slices: usize,
    pub split: SplitRatios,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub topn: Vec<usize>,
    /// `None` ranks by plain fix counts.
    pub baseline_half_life_days: Option<f64>,
    pub pairing: Pairing,
    pub activity_stages: usize,
    pub rankings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: "corpus".into(),
            labels: "work/labels.tsv".into(),
            edges: "work/edges.tsv".into(),
            graph: "work/graph.htg".into(),
            ckpt: "work/ckpt".into(),
            report: "work/report".into(),
            relations: RelationConfig::default(),
            slices: 10,
            split: SplitRatios::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            topn: vec![1, 3, 5],
            baseline_half_life_days: Some(30.0),
            pairing: Pairing::ReciprocalRank,
            activity_stages: 5,
            rankings: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e: T::Err| PipelineError::Config(format!("{key}: `{value}`: {e}")))
}

impl RunConfig {
    /// Every key accepted by [`RunConfig::set`], in [`RunConfig::pairs`] order.
    pub const KEYS: [&'static str; 26] = [
        "corpus",
        "labels",
        "edges",
        "graph",
        "ckpt",
        "report",
        "k",
        "tau",
        "slices",
        "split",
        "tw",
        "hidden_dim",
        "layers",
        "dropout",
        "seed",
        "epochs",
        "patience",
        "lr",
        "weight_decay",
        "margin",
        "negatives",
        "topn",
        "baseline_half_life_days",
        "pairing",
        "activity_stages",
        "rankings",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let v = value.trim();
        match key {
            "corpus" => self.corpus = v.into(),
            "labels" => self.labels = v.into(),
            "edges" => self.edges = v.into(),
            "graph" => self.graph = v.into(),
            "ckpt" => self.ckpt = v.into(),
            "report" => self.report = v.into(),
            "k" => self.relations.k = parse(key, v)?,
            "tau" => self.relations.tau = parse(key, v)?,
            "slices" => self.slices = parse(key, v)?,
            "split" => self.split = parse(key, v)?,
            "tw" => self.model.tw = parse(key, v)?,
            "hidden_dim" => self.model.hidden_dim = parse(key, v)?,
            "layers" => self.model.layers = parse(key, v)?,
            "dropout" => self.model.dropout = parse(key, v)?,
            "seed" => self.model.seed = parse(key, v)?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "patience" => self.train.patience = parse(key, v)?,
            "lr" => self.train.lr = parse(key, v)?,
            "weight_decay" => self.train.weight_decay = parse(key, v)?,
            "margin" => self.train.margin = parse(key, v)?,
            "negatives" => self.train.negatives = parse(key, v)?,
            "topn" => {
                self.topn = v
                    .split(',')
                    .map(|n| parse(key, n.trim()))
                    .collect::<Result<_, _>>()?;
                if self.topn.is_empty() || self.topn.contains(&0) {
                    return Err(PipelineError::Config(format!("topn: `{v}`")));
                }
            }
            "baseline_half_life_days" => {
                self.baseline_half_life_days = match v {
                    "none" | "inf" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "pairing" => self.pairing = parse(key, v)?,
            "activity_stages" => self.activity_stages = parse(key, v)?,
            "rankings" => self.rankings = parse(key, v)?,
            _ => return Err(PipelineError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Defaults, then `file` (or the file named by [`CONFIG_ENV`]), then
    /// `overrides` in order.
    pub fn resolve<'a, I>(file: Option<&Path>, overrides: I) -> Result<Self, PipelineError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut c = RunConfig::default();
        let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        if let Some(path) = file.map(Path::to_path_buf).or(env) {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            c.apply_text(&text)?;
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.model.validate()?;
        self.train.validate()?;
        if self.slices < 3 || self.activity_stages == 0 {
            return Err(PipelineError::Config(format!(
                "slices = {}, activity_stages = {}",
                self.slices, self.activity_stages
            )));
        }
        if !(self.relations.tau >= 0.0 && self.relations.tau <= 1.0) {
            return Err(PipelineError::Config(format!(
                "tau = {}",
                self.relations.tau
            )));
        }
        Ok(())
    }

    /// Fully resolved settings, one pair per key.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let p = |p: &Path| p.display().to_string();
        let values = [
            p(&self.corpus),
            p(&self.labels),
            p(&self.edges),
            p(&self.graph),
            p(&self.ckpt),
            p(&self.report),
            self.relations.k.to_string(),
            self.relations.tau.to_string(),
            self.slices.to_string(),
            self.split.to_string(),
            self.model.tw.to_string(),
            self.model.hidden_dim.to_string(),
            self.model.layers.to_string(),
            self.model.dropout.to_string(),
            self.model.seed.to_string(),
            self.train.epochs.to_string(),
            self.train.patience.to_string(),
            self.train.lr.to_string(),
            self.train.weight_decay.to_string(),
            self.train.margin.to_string(),
            self.train.negatives.to_string(),
            self.topn
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            self.baseline_half_life_days
                .map_or_else(|| "none".to_string(), |h| h.to_string()),
            self.pairing.as_str().to_string(),
            self.activity_stages.to_string(),
            self.rankings.to_string(),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn to_text(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("tw", "3").unwrap();
        c.set("topn", "1, 10").unwrap();
        c.set("baseline_half_life_days", "none").unwrap();
        c.set("split", "6:2:2").unwrap();
        let mut d = RunConfig::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn precedence_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\ntw = 4\nseed=9\n").unwrap();
        let c = RunConfig::resolve(Some(&path), [("tw", "5")]).unwrap();
        assert_eq!((c.model.tw, c.model.seed), (5, 9));
        assert_eq!(c.train.lr, 5e-3);
        let mut d = RunConfig::default();
        assert!(d.set("bogus", "1").is_err());
        assert!(d.set("tw", "x").is_err());
        assert!(d.apply_text("tw 3").is_err());
        assert!(RunConfig::resolve(None, [("tw", "9")]).is_err());
    }
}
