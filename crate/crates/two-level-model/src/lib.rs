//! Rooms, map graphs, and two-level navigation models, plus the stitching
//! construction that flattens a model into one explicit MDP.
//!
//! A two-level model is a map graph whose vertices are labeled with rooms
//! (low-level MDP fragments with entrances, exits, bad states, and a reset
//! state). Stitching produces the explicit MDP over `(room state, vertex)`
//! pairs: non-exit states keep their room dynamics, and each exit state has a
//! single crossing action that drops the agent into the neighboring room via
//! that room's entrance distribution.
//!
//! Everything here is immutable after construction and freely shareable
//! across threads. Validation is split in two: constructors reject
//! structurally unusable data (bad indices, malformed rows), while
//! [`TwoLevelModel::validate`] reports the first semantic violation
//! (overlapping exits, direction mismatches, ...) with the offending
//! vertex/direction/state named.

mod error;
mod json;
mod map;
mod model;
mod room;
mod stitch;

pub use error::ModelError;
pub use json::{load_model, model_from_json, model_to_json, save_model};
pub use map::{HalfEdge, MapGraph, VertexId};
pub use model::{RoomId, TwoLevelModel};
pub use room::{DirectionId, Room};
pub use stitch::{path_projection, stitch_explicit_mdp, ExplicitState, StitchedMdp};
