//! Small hand-built models shared by the unit tests.

use mdp_core::{Policy, SparseDist};
use two_level_model::{MapGraph, Room, TwoLevelModel};

use crate::catalog::RoomPolicies;

/// A 3-state corridor with one direction: state 0 is the entrance, state 1
/// the exit, state 2 the reset. One action walks forward; the exit and
/// reset rows loop back to the entrance (the de-facto restart).
pub fn corridor_room() -> Room {
    Room::new(
        3,
        1,
        vec![
            (0, 0, SparseDist::dirac(1)),
            (1, 0, SparseDist::dirac(1)),
            (2, 0, SparseDist::dirac(0)),
        ],
        vec!["door".into()],
        vec![(0, SparseDist::dirac(0))],
        vec![(0, vec![1])],
        vec![],
        2,
    )
    .unwrap()
}

/// Two vertices joined by one edge, both labeled with the corridor room.
/// Start at vertex 0, first commitment into vertex 1, target vertex 1.
pub fn two_room_model() -> TwoLevelModel {
    let map = MapGraph::new(vec!["a".into(), "b".into()], vec![(0, 1)]).unwrap();
    TwoLevelModel::new(
        map,
        vec![("corridor".into(), corridor_room())],
        vec![0, 0],
        vec![vec![0], vec![0]],
        0,
        (0, 1),
        (0, 1),
        vec![1],
    )
    .unwrap()
}

/// The always-walk-forward policy for a room, under every direction.
pub fn forward_catalog(h: &TwoLevelModel) -> RoomPolicies {
    let mut catalog = RoomPolicies::new();
    for r in 0..h.n_rooms() {
        let room = h.room(r);
        for d in 0..room.n_directions() {
            catalog.insert(r, d, Policy::Deterministic(vec![0; room.n_states()]));
        }
    }
    catalog
}

/// Star map: center vertex 0 labeled with a fork room (bias `p` toward the
/// direction-0 exit), leaves 1 and 2 labeled with corridors. Start at the
/// hub, first commitment into vertex 1, target vertex 2.
pub fn star_model(p: f64) -> TwoLevelModel {
    let map = MapGraph::new(
        vec!["hub".into(), "east".into(), "west".into()],
        vec![(0, 1), (0, 2)],
    )
    .unwrap();
    TwoLevelModel::new(
        map,
        vec![
            ("fork".into(), forked_room(p)),
            ("corridor".into(), corridor_room()),
        ],
        vec![0, 1, 1],
        vec![vec![0, 1], vec![0], vec![0]],
        0,
        (0, 1),
        (0, 1),
        vec![2],
    )
    .unwrap()
}

/// A 4-state room with two directions for slip tests: state 0 is the
/// entrance; the single action moves to the direction-0 exit (state 1) with
/// probability `p` and to the direction-1 exit (state 2) otherwise. State 3
/// is the reset.
pub fn forked_room(p: f64) -> Room {
    Room::new(
        4,
        1,
        vec![
            (0, 0, SparseDist::new(vec![(1, p), (2, 1.0 - p)]).unwrap()),
            (1, 0, SparseDist::dirac(0)),
            (2, 0, SparseDist::dirac(0)),
            (3, 0, SparseDist::dirac(0)),
        ],
        vec!["left".into(), "right".into()],
        vec![
            (0, SparseDist::dirac(0)),
            (1, SparseDist::dirac(0)),
        ],
        vec![(0, vec![1]), (1, vec![2])],
        vec![],
        3,
    )
    .unwrap()
}
