//! Fixtures shared by the pipeline benches.

use htgtriage_core::autograd::Params;
use htgtriage_core::corpus::Corpus;
use htgtriage_core::htg::{window_batches, Htg};
use htgtriage_core::model::{init_params, ParamLayout, TargetIssue, WindowGraph};
use htgtriage_core::pipeline::{build_from_corpus, RunConfig, TrainedModel};
use htgtriage_core::synth::{generate_synthetic, SynthSpec};

/// Default synthetic tracker with `issues` issues.
pub fn corpus(issues: usize) -> Corpus {
    generate_synthetic(&SynthSpec {
        issues,
        seed: 1,
        ..SynthSpec::default()
    })
    .expect("default spec is feasible")
}

pub fn graph(corpus: &Corpus) -> Htg {
    build_from_corpus(corpus, &RunConfig::default())
        .expect("synthetic corpus builds")
        .2
}

/// The first training window of `htg` with fresh parameters.
pub struct Window {
    pub params: Params,
    pub layout: ParamLayout,
    pub graph: WindowGraph,
}

pub fn first_window(htg: &Htg) -> Window {
    let config = RunConfig::default();
    let (split, universe, candidates) = TrainedModel::frame(htg, &config).expect("frame");
    let plan = window_batches(htg, config.model.tw, &split).expect("windows");
    let b = &plan.train[0];
    let mut all = TargetIssue::from_snapshot(htg.snapshot(b.target_slice));
    let targets: Vec<TargetIssue> = b
        .target_issues()
        .into_iter()
        .filter_map(|i| all.remove(i))
        .collect();
    let params = init_params(&config.model, &universe).expect("init");
    let layout = ParamLayout::new(&config.model, &universe, &params).expect("layout");
    let graph = WindowGraph::new(
        htg,
        &b.input_slices,
        &targets,
        &candidates,
        &universe,
        config.model.hidden_dim,
        config.model.seed,
    )
    .expect("window");
    Window {
        params,
        layout,
        graph,
    }
}
