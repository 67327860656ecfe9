pub mod absorb;
pub mod audit;
pub mod couple;
pub mod gen;
pub mod matchings;
pub mod partition;
pub mod pipeline;
