//! Maximal quantum efficiency (MQE) networks.
//!
//! Users are points in a square. Every pair may be joined by a lossy bosonic
//! link whose secret-key capacitance follows the repeaterless bound
//! `q(d) = -log2(1 - exp(-d/lambda0))`. Routing through trusted nodes raises
//! capacitance but each relay is malicious with probability `p`. For a
//! trade-off weight `alpha` every pair gets the path maximizing
//!
//! ```text
//! eff = (1 - alpha) * min_edge_capacitance + alpha * ln(1 - p) * intermediates
//! ```
//!
//! and the MQE network is the union of those paths.
//!
//! Modules:
//! - [`geometry`]: user sets, distances, the analytic distance density on the square
//! - [`qchannel`]: link/path capacitance, security and efficiency functionals
//! - [`optimizer`]: max-min matrix iteration, per-pair budget selection, path reconstruction
//! - [`metrics`]: network observables and modified betweenness
//! - [`theory`]: thresholds, single-pair regime diagram, fully connected and spanning-tree limits
//! - [`harness`]: ensembles, sweeps, CSV persistence

pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod qchannel;
pub mod quad;
pub mod theory;

pub use error::{MqeError, Result};
pub use geometry::{distance_matrix, distance_pdf, sample_users, DistanceMatrix, UserSet};
pub use metrics::{density_scaling, modified_betweenness, observables, BetweennessTable, NetworkObservables};
pub use optimizer::{brute_force_optimal, build_mqe, optimal_m, pollack_maxmin, reconstruct_path, MaxMinSequence, MqeNetwork, OptimalPath};
pub use qchannel::{
    link_capacitance, network_efficiency, path_capacitance, path_efficiency, path_security, CapacitanceMatrix,
    PathDescriptor, INFINITE_CAPACITANCE,
};

/// `1 - 1/e`, the malicious-node probability for which `ln(1 - p) = -1`.
pub const P_INV_E: f64 = 1.0 - 0.367_879_441_171_442_33;
