pub mod cells;
pub mod cli;
pub mod error;
pub mod graph;
pub mod numerics;
pub mod pipeline;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
