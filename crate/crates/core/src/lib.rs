pub mod autograd;
pub mod corpus;
pub mod evaluation;
pub mod htg;
pub mod model;
pub mod pipeline;
pub mod relations;
pub mod rng;
pub mod synth;
pub mod training;
