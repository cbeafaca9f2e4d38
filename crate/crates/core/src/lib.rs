//! Event prediction on time series through evolutionary state graphs.
//!
//! The pipeline: cut series into fixed-length segments, recognise each
//! segment as a soft mixture over a small set of states, link consecutive
//! recognitions into a sequence of weighted transition graphs, then run a
//! recurrent graph network over the sequence to predict the next event.

pub mod autodiff;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod recognition;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
