use mdp_core::{ActionId, MdpError, StateId};
use thiserror::Error;

/// Errors produced while relating a ground model to its latent abstraction.
#[derive(Debug, Error)]
pub enum LatentError {
    /// Two objects that must share a state or action space do not.
    #[error("domain mismatch: {detail}")]
    DomainMismatch { detail: String },

    /// The embedding does not preserve the target/bad labeling: a ground
    /// state and its image disagree about membership.
    #[error("label mismatch at ground state {state}: {detail}")]
    LabelMismatch { state: StateId, detail: String },

    /// A weight vector over ground states is not a probability distribution.
    #[error("invalid distribution: {detail}")]
    InvalidDistribution { detail: String },

    /// An estimator was invoked on an empty sample set.
    #[error("cannot estimate from an empty sample set")]
    EmptySample,

    /// The initial-state sample-size rule needs current estimates of the
    /// loss and the reset mass, and none were supplied.
    #[error("initial-state sample size requires current (loss, reset-mass) estimates")]
    MissingEstimates,

    /// The reset state carries no stationary mass, so every bound that
    /// divides by it is undefined.
    #[error("reset mass is zero; the initial-state bound is undefined")]
    DegenerateReset,

    /// A latent (state, action) pair was never observed and no smoothing was
    /// requested, leaving its transition row undefined.
    #[error("latent state {latent_state}, action {action} was never observed and smoothing is zero")]
    UnseenPairWithoutSmoothing {
        latent_state: StateId,
        action: ActionId,
    },

    /// A scalar parameter lies outside its admissible range.
    #[error("parameter {name} = {value} is outside {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A report or model could not be read from JSON.
    #[error("malformed JSON: {detail}")]
    Json { detail: String },

    #[error(transparent)]
    Mdp(#[from] MdpError),
}
