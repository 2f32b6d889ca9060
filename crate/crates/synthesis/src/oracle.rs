//! Room traversal values: how much discounted success probability a room
//! contributes when walked from one door to another.

use mdp_core::{value_reach_avoid, Policy, ReachAvoidObjective, SparseDist, StateId};
use two_level_model::{DirectionId, ModelError, RoomId, TwoLevelModel};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::catalog::{validate_policy_for_room, RoomPolicies};
use crate::error::SynthesisError;

/// Source of per-room traversal values.
///
/// `traversal_value(r, entry, exit)` is the expected discount accumulated
/// from the `entry` entrance of room `r` until the crossing through an
/// `exit` door completes, counting the crossing step itself; runs that hit
/// a bad state or the room's reset contribute zero. Values therefore lie in
/// `[0, gamma]`, and `gamma()` reports the discount they were computed at.
pub trait RoomValueOracle {
    fn gamma(&self) -> f64;

    fn traversal_value(
        &self,
        room: RoomId,
        entry: DirectionId,
        exit: DirectionId,
    ) -> Result<f64, SynthesisError>;
}

/// Exact traversal values for a model's rooms under a policy catalog.
///
/// Construction runs one reach-avoid evaluation per (room, exit direction)
/// pair present in the catalog — in parallel when the `parallel` feature is
/// on — and stores the full value vectors, so lookups are O(entrance
/// support).
pub struct CatalogOracle<'a> {
    h: &'a TwoLevelModel,
    gamma: f64,
    /// `values[r][d_out]`: value-to-exit vector over room `r`'s states,
    /// present where the catalog has a committed policy.
    values: Vec<Vec<Option<Vec<f64>>>>,
}

impl<'a> CatalogOracle<'a> {
    pub fn new(
        h: &'a TwoLevelModel,
        policies: &RoomPolicies,
        gamma: f64,
        tol: f64,
    ) -> Result<Self, SynthesisError> {
        let mut jobs: Vec<(RoomId, DirectionId, &Policy)> = Vec::new();
        for r in 0..h.n_rooms() {
            let room = h.room(r);
            for d in 0..room.n_directions() {
                if let Some(policy) = policies.get(r, d) {
                    validate_policy_for_room(
                        policy,
                        room,
                        h.room_name(r),
                        room.direction_name(d),
                    )?;
                    jobs.push((r, d, policy));
                }
            }
        }

        let compute = |&(r, d, policy): &(RoomId, DirectionId, &Policy)| {
            let room = h.room(r);
            let mdp = room.to_mdp(SparseDist::dirac(room.reset()))?;
            let avoid: Vec<StateId> = room
                .bad_states()
                .chain(std::iter::once(room.reset()))
                .collect();
            let obj =
                ReachAvoidObjective::new(room.n_states(), room.exit_states(d), &avoid, gamma)?;
            let values = value_reach_avoid(&mdp, policy, &obj, tol)?;
            Ok::<_, SynthesisError>((r, d, values.values))
        };
        #[cfg(feature = "parallel")]
        let computed = jobs.par_iter().map(compute).collect::<Result<Vec<_>, _>>()?;
        #[cfg(not(feature = "parallel"))]
        let computed = jobs.iter().map(compute).collect::<Result<Vec<_>, _>>()?;

        let mut values: Vec<Vec<Option<Vec<f64>>>> = (0..h.n_rooms())
            .map(|r| vec![None; h.room(r).n_directions()])
            .collect();
        for (r, d, v) in computed {
            values[r][d] = Some(v);
        }
        Ok(Self { h, gamma, values })
    }

    /// The per-state value-to-exit vector behind `traversal_value`, if the
    /// catalog covered the pair.
    pub fn value_vector(&self, room: RoomId, exit: DirectionId) -> Option<&[f64]> {
        self.values
            .get(room)?
            .get(exit)?
            .as_ref()
            .map(|v| v.as_slice())
    }
}

impl RoomValueOracle for CatalogOracle<'_> {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn traversal_value(
        &self,
        room: RoomId,
        entry: DirectionId,
        exit: DirectionId,
    ) -> Result<f64, SynthesisError> {
        if room >= self.h.n_rooms() {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!("room index {room} out of range ({})", self.h.n_rooms()),
            });
        }
        let r = self.h.room(room);
        if entry >= r.n_directions() || exit >= r.n_directions() {
            return Err(SynthesisError::CatalogMismatch {
                detail: format!(
                    "direction pair ({entry}, {exit}) out of range for room {} \
                     ({} directions)",
                    self.h.room_name(room),
                    r.n_directions()
                ),
            });
        }
        let values = self.values[room][exit]
            .as_ref()
            .ok_or_else(|| SynthesisError::MissingPolicy {
                room: self.h.room_name(room).to_string(),
                direction: r.direction_name(exit).to_string(),
            })?;
        let entrance = r.entrance(entry).ok_or_else(|| {
            SynthesisError::Model(ModelError::MissingEntrance {
                vertex: self.h.room_name(room).to_string(),
                direction: r.direction_name(entry).to_string(),
            })
        })?;
        Ok(self.gamma * entrance.expect(|s| values[s]))
    }
}

/// A traversal-value table with explicit entries — for estimated values or
/// hand-written test oracles.
#[derive(Clone, Debug, Default)]
pub struct TableOracle {
    gamma: f64,
    table: std::collections::BTreeMap<(RoomId, DirectionId, DirectionId), f64>,
}

impl TableOracle {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            table: std::collections::BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, room: RoomId, entry: DirectionId, exit: DirectionId, value: f64) {
        self.table.insert((room, entry, exit), value);
    }
}

impl RoomValueOracle for TableOracle {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn traversal_value(
        &self,
        room: RoomId,
        entry: DirectionId,
        exit: DirectionId,
    ) -> Result<f64, SynthesisError> {
        self.table.get(&(room, entry, exit)).copied().ok_or_else(|| {
            SynthesisError::CatalogMismatch {
                detail: format!(
                    "no traversal value for room {room}, entry {entry}, exit {exit}"
                ),
            }
        })
    }
}
