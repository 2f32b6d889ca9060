use std::collections::BTreeMap;
use std::path::Path;

use mdp_core::SparseDist;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::map::MapGraph;
use crate::model::TwoLevelModel;
use crate::room::Room;

/// On-disk model format. Everything is name-based: vertices, rooms, and
/// directions are referenced by their names, so files survive reordering of
/// internal indices. Maps serialize as sorted objects, so `model_to_json`
/// output is deterministic and round-trips byte-identically.
#[derive(Serialize, Deserialize)]
struct RawModel {
    map: RawMap,
    rooms: BTreeMap<String, RawRoom>,
    labeling: BTreeMap<String, RawLabel>,
    v0: String,
    d0: (String, String),
    d1: (String, String),
    targets: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct RawRoom {
    states: usize,
    actions: usize,
    /// `[source, action, [[destination, probability], ...]]` triples.
    transitions: Vec<(usize, usize, Vec<(usize, f64)>)>,
    directions: Vec<String>,
    entrance: BTreeMap<String, Vec<(usize, f64)>>,
    exits: BTreeMap<String, Vec<usize>>,
    bad: Vec<usize>,
    reset: usize,
}

#[derive(Serialize, Deserialize)]
struct RawLabel {
    room: String,
    /// Neighbor vertex name -> room direction name for the half-edge
    /// toward that neighbor.
    doors: BTreeMap<String, String>,
}

fn json_err(detail: impl Into<String>) -> ModelError {
    ModelError::Json {
        detail: detail.into(),
    }
}

pub fn model_from_json(text: &str) -> Result<TwoLevelModel, ModelError> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| json_err(e.to_string()))?;

    let vertex_index = |name: &str| -> Result<usize, ModelError> {
        raw.map
            .vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| json_err(format!("unknown vertex name {name}")))
    };

    let mut edges = Vec::with_capacity(raw.map.edges.len());
    for (a, b) in &raw.map.edges {
        edges.push((vertex_index(a)?, vertex_index(b)?));
    }
    let map = MapGraph::new(raw.map.vertices.clone(), edges)?;

    let mut rooms = Vec::with_capacity(raw.rooms.len());
    for (name, r) in &raw.rooms {
        rooms.push((name.clone(), room_from_raw(name, r)?));
    }
    let room_index = |name: &str| -> Result<usize, ModelError> {
        rooms
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| json_err(format!("unknown room name {name}")))
    };

    let n = map.n_vertices();
    let mut labeling = vec![0usize; n];
    let mut doors = vec![Vec::new(); n];
    for v in 0..n {
        let vname = map.name(v);
        let label = raw
            .labeling
            .get(vname)
            .ok_or_else(|| json_err(format!("vertex {vname} has no labeling entry")))?;
        let r = room_index(&label.room)?;
        labeling[v] = r;
        let room = &rooms[r].1;
        let mut table = Vec::with_capacity(map.degree(v));
        for &u in map.neighbors(v) {
            let uname = map.name(u);
            let dname = label.doors.get(uname).ok_or_else(|| {
                json_err(format!("vertex {vname}: no door assignment for neighbor {uname}"))
            })?;
            let d = room.direction_index(dname).ok_or_else(|| {
                json_err(format!(
                    "vertex {vname}: room {} has no direction named {dname}",
                    label.room
                ))
            })?;
            table.push(d);
        }
        for key in label.doors.keys() {
            let u = vertex_index(key)?;
            if !map.is_edge(v, u) {
                return Err(json_err(format!(
                    "vertex {vname}: door assignment for non-neighbor {key}"
                )));
            }
        }
        doors[v] = table;
    }

    let v0 = vertex_index(&raw.v0)?;
    let d0 = (vertex_index(&raw.d0.0)?, vertex_index(&raw.d0.1)?);
    let d1 = (vertex_index(&raw.d1.0)?, vertex_index(&raw.d1.1)?);
    let mut targets = Vec::with_capacity(raw.targets.len());
    for t in &raw.targets {
        targets.push(vertex_index(t)?);
    }

    TwoLevelModel::new(map, rooms, labeling, doors, v0, d0, d1, targets)
}

fn room_from_raw(name: &str, raw: &RawRoom) -> Result<Room, ModelError> {
    let mut transitions = Vec::with_capacity(raw.transitions.len());
    for (s, a, entries) in &raw.transitions {
        let dist = SparseDist::new(entries.clone()).map_err(|e| {
            json_err(format!("room {name}, row ({s}, {a}): {e}"))
        })?;
        transitions.push((*s, *a, dist));
    }
    let direction_index = |dname: &str| -> Result<usize, ModelError> {
        raw.directions
            .iter()
            .position(|d| d == dname)
            .ok_or_else(|| json_err(format!("room {name}: unknown direction {dname}")))
    };
    let mut entrances = Vec::with_capacity(raw.entrance.len());
    for (dname, entries) in &raw.entrance {
        let dist = SparseDist::new(entries.clone()).map_err(|e| {
            json_err(format!("room {name}, entrance {dname}: {e}"))
        })?;
        entrances.push((direction_index(dname)?, dist));
    }
    let mut exits = Vec::with_capacity(raw.exits.len());
    for (dname, states) in &raw.exits {
        exits.push((direction_index(dname)?, states.clone()));
    }
    Room::new(
        raw.states,
        raw.actions,
        transitions,
        raw.directions.clone(),
        entrances,
        exits,
        raw.bad.clone(),
        raw.reset,
    )
}

pub fn model_to_json(model: &TwoLevelModel) -> String {
    let map = model.map();
    let raw_map = RawMap {
        vertices: map.names().to_vec(),
        edges: map
            .edges()
            .iter()
            .map(|&(v, u)| (map.name(v).to_string(), map.name(u).to_string()))
            .collect(),
    };

    let mut rooms = BTreeMap::new();
    for r in 0..model.n_rooms() {
        rooms.insert(model.room_name(r).to_string(), room_to_raw(model.room(r)));
    }

    let mut labeling = BTreeMap::new();
    for v in 0..map.n_vertices() {
        let room = model.room_of(v);
        let mut doors = BTreeMap::new();
        for (&u, &d) in map.neighbors(v).iter().zip(model.door_table(v)) {
            doors.insert(map.name(u).to_string(), room.direction_name(d).to_string());
        }
        labeling.insert(
            map.name(v).to_string(),
            RawLabel {
                room: model.room_name_of(v).to_string(),
                doors,
            },
        );
    }

    let name_pair = |(a, b): (usize, usize)| (map.name(a).to_string(), map.name(b).to_string());
    let raw = RawModel {
        map: raw_map,
        rooms,
        labeling,
        v0: map.name(model.v0()).to_string(),
        d0: name_pair(model.d0()),
        d1: name_pair(model.d1()),
        targets: model
            .targets()
            .iter()
            .map(|&t| map.name(t).to_string())
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}

fn room_to_raw(room: &Room) -> RawRoom {
    let mut transitions = Vec::new();
    for s in 0..room.n_states() {
        for (a, dist) in room.enabled_rows(s) {
            transitions.push((s, *a, dist.entries().to_vec()));
        }
    }
    let mut entrance = BTreeMap::new();
    let mut exits = BTreeMap::new();
    for d in 0..room.n_directions() {
        if let Some(dist) = room.entrance(d) {
            entrance.insert(room.direction_name(d).to_string(), dist.entries().to_vec());
        }
        if !room.exit_states(d).is_empty() {
            exits.insert(room.direction_name(d).to_string(), room.exit_states(d).to_vec());
        }
    }
    RawRoom {
        states: room.n_states(),
        actions: room.n_actions(),
        transitions,
        directions: room.direction_names().to_vec(),
        entrance,
        exits,
        bad: room.bad_states().collect(),
        reset: room.reset(),
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TwoLevelModel, ModelError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| json_err(format!("read {}: {e}", path.as_ref().display())))?;
    model_from_json(&text)
}

pub fn save_model(path: impl AsRef<Path>, model: &TwoLevelModel) -> Result<(), ModelError> {
    std::fs::write(path.as_ref(), model_to_json(model))
        .map_err(|e| json_err(format!("write {}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::stitch::stitch_explicit_mdp;

    #[test]
    fn round_trip_is_byte_identical() {
        let model = fixtures::corridor();
        let text = model_to_json(&model);
        let reloaded = model_from_json(&text).unwrap();
        assert_eq!(model_to_json(&reloaded), text);
    }

    #[test]
    fn round_trip_preserves_the_stitched_mdp() {
        let model = fixtures::corridor();
        let reloaded = model_from_json(&model_to_json(&model)).unwrap();
        let a = stitch_explicit_mdp(&model).unwrap();
        let b = stitch_explicit_mdp(&reloaded).unwrap();
        assert_eq!(mdp_core::mdp_to_json(a.mdp()), mdp_core::mdp_to_json(b.mdp()));
    }

    #[test]
    fn unknown_names_are_rejected_with_context() {
        let model = fixtures::corridor();
        let text = model_to_json(&model).replace("\"targets\": [\n    \"b\"\n  ]", "\"targets\": [\n    \"z\"\n  ]");
        match model_from_json(&text).unwrap_err() {
            ModelError::Json { detail } => assert!(detail.contains('z'), "{detail}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_door_assignment_is_rejected() {
        let model = fixtures::corridor();
        let text = model_to_json(&model).replace("\"b\": \"door\"", "\"zz\": \"door\"");
        let err = model_from_json(&text).unwrap_err();
        assert!(err.to_string().contains("door assignment"), "{err}");
    }

    #[test]
    fn malformed_json_reports_parse_error() {
        assert!(matches!(
            model_from_json("{ not json").unwrap_err(),
            ModelError::Json { .. }
        ));
    }
}
