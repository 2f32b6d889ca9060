//! Relating a ground MDP to a smaller latent model through a state
//! embedding: running latent policies on the ground model, measuring how
//! far the latent transition function is from the embedded dynamics, and
//! turning that distance into certified bounds on the value gap between the
//! two models.
//!
//! The central quantity is the transition loss — the expected total-
//! variation distance between the pushforward of a ground transition row
//! and the corresponding latent row, weighted by the stationary
//! distribution. It can be computed exactly when the ground model is known
//! ([`transition_loss_exact`]) or estimated from simulated transitions
//! ([`transition_loss_estimate`]); either way it converts into closed-form
//! bounds on the average and initial-state value differences
//! ([`value_gap_bounds`]). The estimated route comes with Hoeffding-style
//! sample-size requirements ([`pac_sample_size`]) and an online
//! certification loop ([`certify_online`]) whose stopping rule re-evaluates
//! the requirement as the estimates sharpen.

pub mod embedding;
pub mod empirical;
pub mod error;
pub mod latent_mdp;
pub mod lift;
pub mod loss;
pub mod pac;
pub mod sim;

pub use embedding::{Embedding, LatentId};
pub use empirical::{empirical_latent_mdp, LatentLabels};
pub use error::LatentError;
pub use latent_mdp::LatentMdp;
pub use lift::lift_policy;
pub use loss::{transition_loss_estimate, transition_loss_exact};
pub use pac::{
    certify_average, certify_online, pac_sample_size, value_gap_bounds, GapBounds, PacMode,
    PacParams, PacReport, SampleMode, Termination,
};
pub use sim::{mixing_proxy, SampleSource, StationarySimulator};
