use thiserror::Error;

/// Errors produced by model construction and the numerical operations.
#[derive(Debug, Error)]
pub enum MdpError {
    /// A transition row's probabilities do not sum to 1 within the
    /// renormalization tolerance.
    #[error("transition row for state {state}, action {action} sums to {sum} (must be 1 within {tol})")]
    NonStochasticRow {
        state: usize,
        action: usize,
        sum: f64,
        tol: f64,
    },

    #[error("tolerance must be strictly positive, got {tol}")]
    ToleranceNotPositive { tol: f64 },

    #[error("unknown state index {state} (model has {n_states} states)")]
    UnknownState { state: usize, n_states: usize },

    /// The induced chain does not have a unique aperiodic bottom strongly
    /// connected component among the states reachable from the initial
    /// distribution.
    #[error("induced chain is not ergodic: {detail}")]
    NotErgodic { detail: String },

    /// Structural violation found while constructing or loading a model.
    #[error("invalid model: {detail}")]
    InvalidModel { detail: String },

    /// A policy does not match the model it is used with.
    #[error("invalid policy: {detail}")]
    InvalidPolicy { detail: String },
}
