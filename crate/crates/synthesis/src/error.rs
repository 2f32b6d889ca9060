use mdp_core::MdpError;
use thiserror::Error;
use two_level_model::ModelError;

/// Errors for plan construction, planner synthesis and conversion,
/// certificate lifting, and controller execution.
#[derive(Debug, Error)]
pub enum SynthesisError {
    /// The policy catalog has no entry for a (room, direction) pair the
    /// operation needs.
    #[error("no policy for room {room}, direction {direction}")]
    MissingPolicy { room: String, direction: String },

    /// A room's reset rows disagree across actions, so the room has no
    /// well-defined restart distribution and the shared-reset construction
    /// does not apply.
    #[error("room {room} is not episodic: {detail}")]
    NonEpisodicRoom { room: String, detail: String },

    /// A room traversal value fell outside [0, gamma] beyond tolerance.
    #[error(
        "room {room} traversal value {value:.17} for entry {entry} / exit {exit} \
         outside [0, {gamma}]"
    )]
    OracleOutOfRange {
        room: String,
        entry: String,
        exit: String,
        value: f64,
        gamma: f64,
    },

    /// A plan policy reaches the undefined-behavior sink, so it does not
    /// describe a runnable controller.
    #[error("improper plan policy: sink reachable from state {state}")]
    ImproperPolicy { state: usize },

    /// A proper plan policy that is not expressible as a planner: two
    /// committed exit states of the same block choose different crossings.
    #[error("plan policy is not planner-representable: {detail}")]
    NotPlannerRepresentable { detail: String },

    /// A planner table violates its well-formedness contract.
    #[error("invalid planner: {detail}")]
    PlannerInvariant { detail: String },

    /// The policy catalog or oracle disagrees with the model's shape
    /// (state counts, direction counts, action sets).
    #[error("catalog mismatch: {detail}")]
    CatalogMismatch { detail: String },

    /// Closed-form concentration constant unavailable: the trained and
    /// plan-induced entrance distributions have different supports.
    #[error(
        "room {room}: training entrance and plan-induced entrance have \
         different supports; closed-form concentration constant undefined"
    )]
    SupportMismatch { room: String },

    /// The plan's recurrent states visit room states outside the training
    /// room's recurrent class, violating the lifting precondition.
    #[error(
        "room {room}, direction {direction}: plan recurrent class visits \
         room state {state} outside the training room's recurrent class"
    )]
    BsccConditionViolated {
        room: String,
        direction: String,
        state: usize,
    },

    /// JSON (de)serialization failure.
    #[error("planner json: {detail}")]
    Json { detail: String },

    /// Error bubbled up from the two-level model layer.
    #[error(transparent)]
    Model(#[from] ModelError),

    /// Error bubbled up from the MDP layer.
    #[error(transparent)]
    Mdp(#[from] MdpError),
}
