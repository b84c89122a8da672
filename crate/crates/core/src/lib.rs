pub mod agent;
pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod quantum;
