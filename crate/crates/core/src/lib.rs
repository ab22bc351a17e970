//! Sparse recovery with spiking locally competitive networks.
//!
//! A [`SensingProblem`] is solved by simulating a population of point
//! neurons whose average currents follow LCA-style dynamics while each
//! neuron is driven, through the inverse of its gain curve, to fire at the
//! rate prescribed by the penalty's activation map. Proximal-gradient and
//! analog-LCA baselines, synthetic instance generators and reconstruction
//! metrics are included for verification.

pub mod baselines;
pub mod error;
pub mod engine;
pub mod gain;
pub mod generators;
pub mod matrix;
pub mod metrics;
pub mod neuron;
pub mod penalty;
pub mod problem;
pub mod trace;

pub use error::{Error, Result};
pub use gain::{GainCurve, GainTable};
pub use matrix::DenseMatrix;
pub use neuron::{NeuronModel, NeuronState};
pub use penalty::{Penalty, RuleReport, SignMode};
pub use problem::{GramCache, SensingProblem};
pub use trace::{Sample, SolveTrace};
