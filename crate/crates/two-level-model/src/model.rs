use std::collections::BTreeSet;

use mdp_core::SparseDist;

use crate::error::ModelError;
use crate::map::{HalfEdge, MapGraph, VertexId};
use crate::room::{DirectionId, Room};

/// Index into the room catalog of a [`TwoLevelModel`].
pub type RoomId = usize;

/// A two-level navigation model: a map graph whose vertices are labeled with
/// rooms, plus the episode's initial data and the high-level target set.
///
/// Rooms live in a catalog and are shared by reference — many vertices may
/// carry the same room. Because a room's direction set is identified with the
/// outgoing edges of whichever vertex it labels, each vertex supplies a
/// renaming table (`doors`) mapping its outgoing half-edges to the room's
/// directions; the table must be a bijection, which [`validate`] checks.
///
/// [`validate`]: TwoLevelModel::validate
#[derive(Debug, Clone)]
pub struct TwoLevelModel {
    map: MapGraph,
    rooms: Vec<Room>,
    room_names: Vec<String>,
    /// Room labeling each vertex.
    labeling: Vec<RoomId>,
    /// `doors[v][i]` is the room direction assigned to the half-edge from
    /// `v` to `map.neighbors(v)[i]`.
    doors: Vec<Vec<DirectionId>>,
    v0: VertexId,
    d0: HalfEdge,
    d1: HalfEdge,
    targets: Vec<VertexId>,
    is_target: Vec<bool>,
}

impl TwoLevelModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: MapGraph,
        rooms: Vec<(String, Room)>,
        labeling: Vec<RoomId>,
        doors: Vec<Vec<DirectionId>>,
        v0: VertexId,
        d0: HalfEdge,
        d1: HalfEdge,
        mut targets: Vec<VertexId>,
    ) -> Result<Self, ModelError> {
        let invalid = |detail: String| ModelError::InvalidModel { detail };
        let n = map.n_vertices();
        if rooms.is_empty() {
            return Err(invalid("room catalog is empty".into()));
        }
        let (room_names, rooms): (Vec<String>, Vec<Room>) = rooms.into_iter().unzip();
        for (i, name) in room_names.iter().enumerate() {
            if room_names[..i].contains(name) {
                return Err(invalid(format!("duplicate room name {name}")));
            }
        }
        if labeling.len() != n {
            return Err(invalid(format!(
                "labeling covers {} vertices, map has {n}",
                labeling.len()
            )));
        }
        for (v, &r) in labeling.iter().enumerate() {
            if r >= rooms.len() {
                return Err(invalid(format!(
                    "vertex {} labeled with unknown room index {r}",
                    map.name(v)
                )));
            }
        }
        if doors.len() != n {
            return Err(invalid(format!(
                "door table covers {} vertices, map has {n}",
                doors.len()
            )));
        }
        for (v, table) in doors.iter().enumerate() {
            if table.len() != map.degree(v) {
                return Err(invalid(format!(
                    "vertex {} has {} outgoing edges but {} door assignments",
                    map.name(v),
                    map.degree(v),
                    table.len()
                )));
            }
            let n_dirs = rooms[labeling[v]].n_directions();
            for &d in table {
                if d >= n_dirs {
                    return Err(invalid(format!(
                        "vertex {}: door direction index {d} out of range (room has {n_dirs})",
                        map.name(v)
                    )));
                }
            }
        }
        if v0 >= n {
            return Err(invalid(format!("initial vertex {v0} out of range")));
        }
        for (which, (a, b)) in [("d0", d0), ("d1", d1)] {
            if a >= n || b >= n {
                return Err(invalid(format!("{which} = ({a}, {b}) references a vertex out of range")));
            }
        }
        targets.sort_unstable();
        targets.dedup();
        if let Some(&t) = targets.last() {
            if t >= n {
                return Err(invalid(format!("target vertex {t} out of range")));
            }
        }
        let mut is_target = vec![false; n];
        for &t in &targets {
            is_target[t] = true;
        }
        Ok(TwoLevelModel {
            map,
            rooms,
            room_names,
            labeling,
            doors,
            v0,
            d0,
            d1,
            targets,
            is_target,
        })
    }

    /// Checks the semantic invariants, returning the first violation in a
    /// deterministic order: map shape (self-loops, duplicate edges, isolated
    /// vertices), then each room in catalog order, then each vertex's
    /// direction bijection, then the initial directions.
    pub fn validate(&self) -> Result<(), ModelError> {
        for &(v, u) in self.map.edges() {
            if v == u {
                return Err(ModelError::SelfLoop {
                    vertex: self.map.name(v).to_string(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for &(v, u) in self.map.edges() {
            let key = (v.min(u), v.max(u));
            if !seen.insert(key) {
                return Err(ModelError::DuplicateEdge {
                    a: self.map.name(key.0).to_string(),
                    b: self.map.name(key.1).to_string(),
                });
            }
        }
        for v in 0..self.map.n_vertices() {
            if self.map.degree(v) == 0 {
                return Err(ModelError::IsolatedVertex {
                    vertex: self.map.name(v).to_string(),
                });
            }
        }
        for (r, room) in self.rooms.iter().enumerate() {
            if let Some(err) = room.first_violation(&self.room_names[r]) {
                return Err(err);
            }
        }
        for v in 0..self.map.n_vertices() {
            self.check_direction_bijection(v)?;
        }
        for (which, (a, b)) in [("d0", self.d0), ("d1", self.d1)] {
            if a != self.v0 {
                return Err(ModelError::InitialDirectionInvalid {
                    which: which.to_string(),
                    detail: format!(
                        "({}, {}) does not originate at the initial vertex {}",
                        self.map.name(a),
                        self.map.name(b),
                        self.map.name(self.v0)
                    ),
                });
            }
            if !self.map.is_edge(a, b) {
                return Err(ModelError::InitialDirectionInvalid {
                    which: which.to_string(),
                    detail: format!(
                        "{} is not a neighbor of the initial vertex {}",
                        self.map.name(b),
                        self.map.name(a)
                    ),
                });
            }
        }
        Ok(())
    }

    /// The direction table at `v` must be a bijection between `out(v)` and
    /// the labeled room's direction set.
    pub(crate) fn check_direction_bijection(&self, v: VertexId) -> Result<(), ModelError> {
        let room = self.room_of(v);
        if room.n_directions() != self.map.degree(v) {
            return Err(ModelError::DirectionMismatch {
                vertex: self.map.name(v).to_string(),
                detail: format!(
                    "room {} has {} directions but the vertex has degree {}",
                    self.room_name_of(v),
                    room.n_directions(),
                    self.map.degree(v)
                ),
            });
        }
        let mut used = vec![false; room.n_directions()];
        for (&u, &d) in self.map.neighbors(v).iter().zip(&self.doors[v]) {
            if used[d] {
                return Err(ModelError::DirectionMismatch {
                    vertex: self.map.name(v).to_string(),
                    detail: format!(
                        "direction {} assigned to more than one edge (second: to {})",
                        room.direction_name(d),
                        self.map.name(u)
                    ),
                });
            }
            used[d] = true;
        }
        Ok(())
    }

    pub fn map(&self) -> &MapGraph {
        &self.map
    }

    pub fn n_rooms(&self) -> usize {
        self.rooms.len()
    }

    pub fn room(&self, r: RoomId) -> &Room {
        &self.rooms[r]
    }

    pub fn room_name(&self, r: RoomId) -> &str {
        &self.room_names[r]
    }

    pub fn room_id_of(&self, v: VertexId) -> RoomId {
        self.labeling[v]
    }

    pub fn room_of(&self, v: VertexId) -> &Room {
        &self.rooms[self.labeling[v]]
    }

    pub fn room_name_of(&self, v: VertexId) -> &str {
        &self.room_names[self.labeling[v]]
    }

    pub fn labeling(&self) -> &[RoomId] {
        &self.labeling
    }

    pub fn door_table(&self, v: VertexId) -> &[DirectionId] {
        &self.doors[v]
    }

    pub fn v0(&self) -> VertexId {
        self.v0
    }

    pub fn d0(&self) -> HalfEdge {
        self.d0
    }

    pub fn d1(&self) -> HalfEdge {
        self.d1
    }

    /// Target vertices, sorted ascending.
    pub fn targets(&self) -> &[VertexId] {
        &self.targets
    }

    pub fn is_target(&self, v: VertexId) -> bool {
        self.is_target[v]
    }

    /// Room direction assigned to the half-edge `(v, u)`.
    pub fn direction_at(&self, v: VertexId, u: VertexId) -> Option<DirectionId> {
        let pos = self.map.neighbors(v).binary_search(&u).ok()?;
        Some(self.doors[v][pos])
    }

    /// Inverse of [`direction_at`]: the half-edge at `v` carrying room
    /// direction `d` (unique when the door table is a bijection).
    ///
    /// [`direction_at`]: TwoLevelModel::direction_at
    pub fn half_edge_for(&self, v: VertexId, d: DirectionId) -> Option<HalfEdge> {
        let pos = self.doors[v].iter().position(|&x| x == d)?;
        Some((v, self.map.neighbors(v)[pos]))
    }

    /// Entrance distribution used when crossing the half-edge `(from, to)`:
    /// the entered room's entrance at the door that the physical edge
    /// `{from, to}` occupies on `to`'s side.
    pub fn entrance_for_crossing(&self, from: VertexId, to: VertexId) -> Result<&SparseDist, ModelError> {
        let door = self.direction_at(to, from).ok_or_else(|| ModelError::InvalidModel {
            detail: format!(
                "({}, {}) is not an edge of the map",
                self.map.name(from),
                self.map.name(to)
            ),
        })?;
        self.room_of(to).entrance(door).ok_or_else(|| ModelError::MissingEntrance {
            vertex: self.map.name(to).to_string(),
            direction: self.room_of(to).direction_name(door).to_string(),
        })
    }

    /// Entrance distribution of the initial room: the episode starts in
    /// `ℓ(v0)` entered through the door that `d0` occupies at `v0`.
    pub fn initial_entrance(&self) -> Result<&SparseDist, ModelError> {
        let (v, w) = self.d0;
        let door = self.direction_at(v, w).ok_or_else(|| ModelError::InitialDirectionInvalid {
            which: "d0".to_string(),
            detail: format!(
                "({}, {}) is not an edge of the map",
                self.map.name(v),
                self.map.name(w)
            ),
        })?;
        self.room_of(v).entrance(door).ok_or_else(|| ModelError::MissingEntrance {
            vertex: self.map.name(v).to_string(),
            direction: self.room_of(v).direction_name(door).to_string(),
        })
    }
}
