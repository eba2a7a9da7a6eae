pub mod cli;
pub mod error;
pub mod features;
pub mod graph;
pub mod graphlearn;
pub mod ingest;
pub mod ml;
pub mod pipeline;
pub mod signals;
pub mod superpixel;
pub mod synth;

pub use error::{Error, Result};
