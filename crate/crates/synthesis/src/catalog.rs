//! Per-(room, direction) policy catalogs and the packaged controller.
//!
//! A catalog holds one in-room policy per (room, committed direction) pair.
//! Rooms are reusable across vertices, so policies are keyed by room id, not
//! vertex: every vertex labeled with the same room reuses the same entries.

use latent_abstraction::{lift_policy, Embedding};
use mdp_core::Policy;
use two_level_model::{DirectionId, Room, RoomId, TwoLevelModel};

use crate::error::SynthesisError;
use crate::planner::Planner;

/// One in-room policy per (room, direction): the behavior to follow while a
/// crossing through that direction is committed.
#[derive(Clone, Debug, Default)]
pub struct RoomPolicies {
    table: Vec<Vec<Option<Policy>>>,
}

impl RoomPolicies {
    pub fn new() -> Self {
        Self { table: Vec::new() }
    }

    /// An empty catalog shaped for `rooms`: one slot per direction per room.
    pub fn for_rooms(rooms: &[Room]) -> Self {
        Self {
            table: rooms
                .iter()
                .map(|r| vec![None; r.n_directions()])
                .collect(),
        }
    }

    pub fn insert(&mut self, room: RoomId, direction: DirectionId, policy: Policy) {
        if self.table.len() <= room {
            self.table.resize_with(room + 1, Vec::new);
        }
        if self.table[room].len() <= direction {
            self.table[room].resize_with(direction + 1, || None);
        }
        self.table[room][direction] = Some(policy);
    }

    pub fn get(&self, room: RoomId, direction: DirectionId) -> Option<&Policy> {
        self.table
            .get(room)?
            .get(direction)?
            .as_ref()
    }

    /// Drops the entry for a pair, returning the policy it held.
    pub fn remove(&mut self, room: RoomId, direction: DirectionId) -> Option<Policy> {
        self.table.get_mut(room)?.get_mut(direction)?.take()
    }

    /// Looks up a policy, naming the missing pair on failure.
    pub fn require(
        &self,
        room: RoomId,
        direction: DirectionId,
        room_label: &str,
        direction_label: &str,
    ) -> Result<&Policy, SynthesisError> {
        self.get(room, direction)
            .ok_or_else(|| SynthesisError::MissingPolicy {
                room: room_label.to_string(),
                direction: direction_label.to_string(),
            })
    }

    /// Checks that every (room, direction) pair of `rooms` has an entry
    /// that matches the room's state count and only plays enabled actions.
    pub fn validate_for(&self, rooms: &[Room], names: &[String]) -> Result<(), SynthesisError> {
        for (r, room) in rooms.iter().enumerate() {
            let label = names.get(r).map(String::as_str).unwrap_or("?");
            for d in 0..room.n_directions() {
                let policy = self.require(r, d, label, room.direction_name(d))?;
                validate_policy_for_room(policy, room, label, room.direction_name(d))?;
            }
        }
        Ok(())
    }
}

/// Checks one policy against one room: state counts match and only enabled
/// actions are played.
pub fn validate_policy_for_room(
    policy: &Policy,
    room: &Room,
    room_label: &str,
    direction_label: &str,
) -> Result<(), SynthesisError> {
    if policy.n_states() != room.n_states() {
        return Err(SynthesisError::CatalogMismatch {
            detail: format!(
                "policy for room {room_label}, direction {direction_label} covers {} states, \
                 room has {}",
                policy.n_states(),
                room.n_states()
            ),
        });
    }
    for s in 0..room.n_states() {
        for (a, p) in policy.action_probs(s) {
            if p > 0.0 && room.row(s, a).is_none() {
                return Err(SynthesisError::CatalogMismatch {
                    detail: format!(
                        "policy for room {room_label}, direction {direction_label} plays \
                         disabled action {a} at state {s}"
                    ),
                });
            }
        }
    }
    Ok(())
}

/// A complete two-level controller: the planner picks crossings, the policy
/// catalog steers inside rooms, and the embeddings translate observed room
/// states into the latent states the policies are defined on.
#[derive(Clone, Debug)]
pub struct TwoLevelController {
    pub planner: Planner,
    /// Policies over latent room states, keyed by (room, direction).
    pub policies: RoomPolicies,
    /// One embedding per room id, mapping observed room states to latent
    /// states. Identity embeddings make the catalog operate on room states
    /// directly.
    pub embeddings: Vec<Embedding>,
}

impl TwoLevelController {
    pub fn new(planner: Planner, policies: RoomPolicies, embeddings: Vec<Embedding>) -> Self {
        Self {
            planner,
            policies,
            embeddings,
        }
    }

    /// A controller whose policies read room states directly.
    pub fn ground(
        planner: Planner,
        policies: RoomPolicies,
        rooms: &[Room],
    ) -> Result<Self, SynthesisError> {
        let embeddings = rooms
            .iter()
            .map(|r| identity_embedding(r.n_states()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            planner,
            policies,
            embeddings,
        })
    }

    /// Translates the catalog into policies over room states by composing
    /// each policy with its room's embedding.
    pub fn lifted_policies(&self, h: &TwoLevelModel) -> Result<RoomPolicies, SynthesisError> {
        let mut lifted = RoomPolicies::new();
        for r in 0..h.n_rooms() {
            let room = h.room(r);
            let phi = self.embeddings.get(r).ok_or_else(|| {
                SynthesisError::CatalogMismatch {
                    detail: format!("no embedding for room {}", h.room_name(r)),
                }
            })?;
            if phi.n_ground() != room.n_states() {
                return Err(SynthesisError::CatalogMismatch {
                    detail: format!(
                        "embedding for room {} covers {} states, room has {}",
                        h.room_name(r),
                        phi.n_ground(),
                        room.n_states()
                    ),
                });
            }
            for d in 0..room.n_directions() {
                if let Some(policy) = self.policies.get(r, d) {
                    let ground = lift_policy(phi, policy).map_err(|e| {
                        SynthesisError::CatalogMismatch {
                            detail: format!(
                                "lifting policy for room {}, direction {}: {e}",
                                h.room_name(r),
                                room.direction_name(d)
                            ),
                        }
                    })?;
                    lifted.insert(r, d, ground);
                }
            }
        }
        Ok(lifted)
    }

    /// Checks the pieces fit `h`: embeddings sized to rooms, planner built
    /// over the same map, and a policy for every (room, direction) pair any
    /// vertex exposes.
    pub fn validate(&self, h: &TwoLevelModel) -> Result<(), SynthesisError> {
        if self.planner.n_vertices() != h.map().n_vertices() {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!(
                    "planner covers {} vertices, map has {}",
                    self.planner.n_vertices(),
                    h.map().n_vertices()
                ),
            });
        }
        for v in 0..h.map().n_vertices() {
            let r = h.room_id_of(v);
            let room = h.room(r);
            let phi = self.embeddings.get(r).ok_or_else(|| {
                SynthesisError::CatalogMismatch {
                    detail: format!("no embedding for room {}", h.room_name(r)),
                }
            })?;
            if phi.n_ground() != room.n_states() {
                return Err(SynthesisError::CatalogMismatch {
                    detail: format!(
                        "embedding for room {} covers {} states, room has {}",
                        h.room_name(r),
                        phi.n_ground(),
                        room.n_states()
                    ),
                });
            }
            for &d in h.door_table(v) {
                let policy =
                    self.policies
                        .get(r, d)
                        .ok_or_else(|| SynthesisError::MissingPolicy {
                            room: h.room_name(r).to_string(),
                            direction: room.direction_name(d).to_string(),
                        })?;
                if policy.n_states() != phi.n_latent() {
                    return Err(SynthesisError::CatalogMismatch {
                        detail: format!(
                            "policy for room {}, direction {} covers {} latent states, \
                             embedding has {}",
                            h.room_name(r),
                            room.direction_name(d),
                            policy.n_states(),
                            phi.n_latent()
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

fn identity_embedding(n: usize) -> Result<Embedding, SynthesisError> {
    Embedding::new((0..n).collect(), n).map_err(|e| SynthesisError::CatalogMismatch {
        detail: format!("identity embedding: {e}"),
    })
}
