//! Edge-reinforced random walk on the ladder ℤ×{1,2}.

pub mod certificates;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod gibbs_mcmc;
pub mod ladder;
pub mod network;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod transfer;
pub mod walk;

pub use error::{Error, Result};
pub use rng::RngSpec;
pub use scalar::{Energy, Scalar};

pub type Weights = ladder::EdgeWeights<f64>;
pub type Weights32 = ladder::EdgeWeights<f32>;
