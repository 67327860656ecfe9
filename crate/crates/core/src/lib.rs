pub mod absorbers;
pub mod error;
pub mod exact_cover;
pub mod format;
pub mod generation;
pub mod hypergraph;
pub mod matching;
pub mod partition;
pub mod pipeline;
pub mod quasi;
pub mod rng;
