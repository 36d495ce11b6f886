//! Hierarchical IIoT trust management simulator.
//!
//! Communities of member nodes are supervised by community leaders that score
//! each member on cooperation, direct honesty and indirect honesty and move
//! its trust along an 11-state Markov chain. Under degraded channels the
//! chain's transition behavior is boosted by a factor derived from the
//! network-condition score and a random-forest prediction of convergence time.

pub mod cli;
pub mod config;
pub mod error;
pub mod forest;
pub mod policy;
pub mod qos;
pub mod report;
pub mod sim;
pub mod tca;
pub mod trust;

pub use error::{Error, Result};
