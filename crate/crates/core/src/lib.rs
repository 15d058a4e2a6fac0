//! Blind separation of legitimate and malicious uplink channel directions in
//! massive MIMO.
//!
//! The pipeline estimates the signal subspace of the received matrix,
//! recovers the noiseless alphabet of projected symbols by
//! characteristic-function deconvolution, and reads the channel directions
//! off the pairwise differences of that alphabet. A complex FastICA baseline
//! and a Monte Carlo harness evaluate the result by directed-to-leakage power
//! ratio.

pub mod cfdeconv;
pub mod coversep;
pub mod cvec;
pub mod error;
pub mod exec;
pub mod fftn;
pub mod harness;
pub mod ica;
pub mod metrics;
pub mod quantgrid;
pub mod scenario;
pub mod subspace;

pub use error::{Error, Result};
pub use exec::Execution;
