//! Cost-coupled constrained stochastic games with per-player Markov chains.

pub mod best_response;
pub mod equilibrium;
pub mod ergodicity;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod scenario;
pub mod simulate;
pub mod stationary;

pub use error::{Error, Result};
