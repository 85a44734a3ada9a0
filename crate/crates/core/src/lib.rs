//! Exact range analysis of feed-forward ReLU networks by quantifier
//! elimination over linear real arithmetic.

pub mod cli;
pub mod formula;
pub mod network;
pub mod partition;
pub mod propagation;
pub mod qe;
pub mod rational;
pub mod robustness;
