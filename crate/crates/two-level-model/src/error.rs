use mdp_core::MdpError;
use thiserror::Error;

/// Errors for model construction, validation, stitching, and serialization.
///
/// Validation errors carry the offending vertex / direction / state by name so
/// that a failed load points at the exact piece of the model to fix.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Structurally malformed input: indices out of range, duplicate names,
    /// missing rows, mismatched table lengths. These are rejected at
    /// construction time because the data cannot be represented faithfully.
    #[error("invalid model: {detail}")]
    InvalidModel { detail: String },

    /// A room state belongs to more than one exit set.
    #[error("room {room}: state {state} is in exit sets {first} and {second}")]
    ExitOverlap {
        room: String,
        state: usize,
        first: String,
        second: String,
    },

    /// A room's reset state doubles as an exit state.
    #[error("room {room}: reset state {state} is in exit set {direction}")]
    ResetInExitSet {
        room: String,
        state: usize,
        direction: String,
    },

    /// An entrance distribution does not sum to 1 within tolerance.
    #[error("room {room}: entrance for direction {direction} sums to {sum:.17e}")]
    EntranceNotNormalized {
        room: String,
        direction: String,
        sum: f64,
    },

    /// The map contains an edge from a vertex to itself.
    #[error("map: self-loop at vertex {vertex}")]
    SelfLoop { vertex: String },

    /// The same undirected edge is listed twice.
    #[error("map: duplicate edge between {a} and {b}")]
    DuplicateEdge { a: String, b: String },

    /// A vertex has no incident edges.
    #[error("map: vertex {vertex} has degree 0")]
    IsolatedVertex { vertex: String },

    /// The labeled room's direction set is not in bijection with the
    /// vertex's outgoing edges.
    #[error("vertex {vertex}: direction mismatch: {detail}")]
    DirectionMismatch { vertex: String, detail: String },

    /// d0 or d1 is not an outgoing edge of the initial vertex.
    #[error("{which} invalid: {detail}")]
    InitialDirectionInvalid { which: String, detail: String },

    /// A room must be entered through a direction for which it has no
    /// entrance distribution.
    #[error("vertex {vertex}: room has no entrance for direction {direction}")]
    MissingEntrance { vertex: String, direction: String },

    /// A state sequence is not a path of the stitched MDP.
    #[error("invalid path at position {position}: {detail}")]
    InvalidPath { position: usize, detail: String },

    /// JSON (de)serialization failure.
    #[error("model json: {detail}")]
    Json { detail: String },

    /// Error bubbled up from the MDP layer while assembling the stitched MDP.
    #[error(transparent)]
    Mdp(#[from] MdpError),
}
