//! Sparse finite Markov decision processes and the numerical primitives used
//! throughout this workspace: discounted reach-avoid value iteration (policy
//! evaluation and optimal control), transient and stationary distributions,
//! bottom strongly connected components, an episodicity check, and seeded
//! simulation.
//!
//! Probabilities are 64-bit floats. States and actions are dense indices;
//! transition rows are sparse coordinate lists, and each state carries its
//! own non-empty enabled-action set. Every constructed [`Mdp`] guarantees
//! stochastic rows, so solvers may assume row sums of 1 up to rounding.
//!
//! Models and policies are immutable after construction and safe to share
//! across threads; solvers are single-threaded per call, and callers may run
//! them on disjoint inputs in parallel.

pub mod chain;
pub mod dist;
pub mod error;
pub mod json;
pub mod model;
pub mod objective;
pub mod policy;
pub mod simulate;
pub mod value;

pub use chain::{
    bsccs, check_episodic, stationary_distribution, transient_measure, EpisodicReport,
    InducedChain,
};
pub use dist::{DistError, SparseDist};
pub use error::MdpError;
pub use json::{load_mdp, mdp_from_json, mdp_to_json, save_mdp};
pub use model::{ActionId, Mdp, StateId};
pub use objective::{ReachAvoidObjective, StateCase, ValueVector};
pub use policy::Policy;
pub use simulate::{simulate, Step, StopRule};
pub use value::{
    bellman_backup, optimal_value_and_policy, value_reach_avoid, value_reach_avoid_traced,
};

/// Numerical tolerances shared across the workspace.
pub mod tolerances {
    /// Constructed distributions sum to 1 within this bound.
    pub const ROW_SUM: f64 = 1e-12;
    /// Rows whose sum deviates from 1 by at most this much are renormalized
    /// on load; larger deviations are rejected.
    pub const ROW_RENORMALIZE: f64 = 1e-9;
    /// Default value-iteration stopping tolerance.
    pub const DEFAULT_VI: f64 = 1e-9;
    /// Transient measures sum to 1 within this bound.
    pub const TRANSIENT_SUM: f64 = 1e-10;
}
