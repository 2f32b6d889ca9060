use mdp_core::{ActionId, Mdp, StateId};

use crate::error::ModelError;
use crate::map::VertexId;
use crate::model::TwoLevelModel;

/// A state of the stitched explicit MDP: a room state tagged with the vertex
/// whose room copy it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExplicitState {
    pub room_state: StateId,
    pub vertex: VertexId,
}

/// The explicit MDP obtained by stitching the per-vertex room copies
/// together, plus the index maps between explicit states and
/// (room state, vertex) pairs.
///
/// Layout: vertex blocks in vertex order; the explicit index of
/// `⟨s, v⟩` is `offsets[v] + s`.
#[derive(Debug, Clone)]
pub struct StitchedMdp {
    mdp: Mdp,
    /// Block start per vertex, plus the total state count as a sentinel.
    offsets: Vec<usize>,
    vertex_of: Vec<VertexId>,
    exit_action: ActionId,
}

impl StitchedMdp {
    pub fn mdp(&self) -> &Mdp {
        &self.mdp
    }

    pub fn into_mdp(self) -> Mdp {
        self.mdp
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    /// The dedicated crossing action; the only action enabled at exit
    /// states, and enabled nowhere else.
    pub fn exit_action(&self) -> ActionId {
        self.exit_action
    }

    pub fn explicit_of(&self, state: StateId) -> ExplicitState {
        let vertex = self.vertex_of[state];
        ExplicitState {
            room_state: state - self.offsets[vertex],
            vertex,
        }
    }

    pub fn index_of(&self, e: ExplicitState) -> StateId {
        debug_assert!(e.room_state < self.offsets[e.vertex + 1] - self.offsets[e.vertex]);
        self.offsets[e.vertex] + e.room_state
    }

    pub fn vertex_of(&self, state: StateId) -> VertexId {
        self.vertex_of[state]
    }

    /// Explicit indices of vertex `v`'s room copy.
    pub fn block(&self, v: VertexId) -> std::ops::Range<StateId> {
        self.offsets[v]..self.offsets[v + 1]
    }
}

/// Stitches the per-vertex room copies into one explicit MDP.
///
/// Every non-exit state keeps its room rows (destinations lifted into the
/// same vertex block). An exit state in room direction `d` — mapped by the
/// vertex's door table to the half-edge `(v, u)` — has exactly one action,
/// the crossing action, whose row is the entered room's entrance for the far
/// side of that edge, lifted into `u`'s block. The initial distribution is
/// the initial room's entrance for `d0` lifted into `v0`'s block.
///
/// The model is expected to be [valid](TwoLevelModel::validate); this
/// function itself only rejects direction tables that are not bijections
/// and missing entrance distributions.
pub fn stitch_explicit_mdp(h: &TwoLevelModel) -> Result<StitchedMdp, ModelError> {
    let n_vertices = h.map().n_vertices();
    for v in 0..n_vertices {
        h.check_direction_bijection(v)?;
    }

    let mut offsets = Vec::with_capacity(n_vertices + 1);
    let mut total = 0usize;
    for v in 0..n_vertices {
        offsets.push(total);
        total += h.room_of(v).n_states();
    }
    offsets.push(total);

    let mut vertex_of = vec![0; total];
    for v in 0..n_vertices {
        for s in offsets[v]..offsets[v + 1] {
            vertex_of[s] = v;
        }
    }

    let max_room_actions = (0..n_vertices)
        .map(|v| h.room_of(v).n_actions())
        .max()
        .expect("map has at least one vertex");
    let exit_action: ActionId = max_room_actions;
    let n_actions = max_room_actions + 1;

    let mut transitions = Vec::new();
    for v in 0..n_vertices {
        let room = h.room_of(v);
        let base = offsets[v];
        for s in 0..room.n_states() {
            if let Some(d) = room.exit_direction_of(s) {
                let (_, u) = h
                    .half_edge_for(v, d)
                    .expect("door table is a bijection for stitched vertices");
                let entrance = h.entrance_for_crossing(v, u)?;
                let row = entrance.map_indices(|t| offsets[u] + t);
                transitions.push((base + s, exit_action, row));
            } else {
                for (a, dist) in room.enabled_rows(s) {
                    transitions.push((base + s, *a, dist.map_indices(|t| base + t)));
                }
            }
        }
    }

    let initial = h.initial_entrance()?.map_indices(|t| offsets[h.v0()] + t);
    let mdp = Mdp::new(total, n_actions, transitions, initial)?;

    Ok(StitchedMdp {
        mdp,
        offsets,
        vertex_of,
        exit_action,
    })
}

/// Projects a path of the stitched MDP to the vertex sequence it traverses,
/// appending a vertex only when it changes. Every consecutive pair must be a
/// possible transition (positive probability under some enabled action).
pub fn path_projection(stitched: &StitchedMdp, path: &[StateId]) -> Result<Vec<VertexId>, ModelError> {
    if path.is_empty() {
        return Err(ModelError::InvalidPath {
            position: 0,
            detail: "empty path".to_string(),
        });
    }
    let n = stitched.n_states();
    for (i, &s) in path.iter().enumerate() {
        if s >= n {
            return Err(ModelError::InvalidPath {
                position: i,
                detail: format!("state {s} out of range (|S| = {n})"),
            });
        }
    }
    for (i, pair) in path.windows(2).enumerate() {
        let (x, y) = (pair[0], pair[1]);
        let possible = stitched
            .mdp
            .enabled_rows(x)
            .iter()
            .any(|(_, dist)| dist.prob(y) > 0.0);
        if !possible {
            return Err(ModelError::InvalidPath {
                position: i + 1,
                detail: format!("no action moves {x} to {y} with positive probability"),
            });
        }
    }
    let mut vertices = Vec::new();
    for &s in path {
        let v = stitched.vertex_of(s);
        if vertices.last() != Some(&v) {
            vertices.push(v);
        }
    }
    Ok(vertices)
}
