//! Joint Markov chain analysis and slot-level simulation of an LTE-LAA eNB (node L)
//! sharing a channel with a Wi-Fi AP (node H) that cannot hear it.
//!
//! The analytic engine solves node L's chain in closed form ([`laa_chain`]), builds node
//! H's per-period matrices ([`wifi_chain`]), couples both in a joint chain ([`jmc`]) and
//! iterates the coupling parameters to a fixed point ([`metrics::fixed_point`]). The
//! simulator ([`sim`]) produces the same [`MetricsReport`] from counted slots.

pub mod config;
pub mod error;
pub mod jmc;
pub mod laa_chain;
pub mod metrics;
pub mod sim;
pub mod sparse;
pub mod state;
pub mod wifi_chain;

pub use config::{LaaStateIndex, RsfChoice, SystemConfig};
pub use error::{Error, Result};
pub use jmc::{JointChain, JointDistribution, Solver, SolverOptions};
pub use laa_chain::{solve_closed_form, LaaChainSolution};
pub use metrics::{fixed_point, FixedPointOptions, FixedPointResult, FixedPointStep, MetricsReport};
pub use sim::{SimConfig, SimMeasurement, SimStats};
pub use state::{WifiState, WifiStateSpace};
pub use wifi_chain::{InnerMatrices, InnerMatrix, Regime};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
