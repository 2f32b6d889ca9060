use mdp_core::{tolerances, ActionId, SparseDist, StateId};

use crate::error::ModelError;

/// Index into a room's direction set `D_R`.
pub type DirectionId = usize;

/// A room: the low-level MDP fragment attached to map vertices.
///
/// A room carries states, per-state partial action sets with sparse
/// transition rows (like [`mdp_core::Mdp`] but with no initial distribution),
/// a named direction set, an entrance distribution per enterable direction,
/// an exit-state set per exitable direction, a bad-state set, and a
/// designated reset state.
///
/// Construction enforces structural soundness only (index ranges, one row per
/// enabled action, at least one action per state). Semantic invariants —
/// pairwise-disjoint exit sets, reset not an exit, normalized entrances — are
/// checked by [`crate::TwoLevelModel::validate`], which can name the room.
/// Whether reset rows equal the distribution the room is (re)started from is
/// an episodic-use concern checked where rooms are trained, not here.
#[derive(Debug, Clone)]
pub struct Room {
    n_states: usize,
    n_actions: usize,
    /// Per state: `(action, row)` pairs sorted by action.
    rows: Vec<Vec<(ActionId, SparseDist)>>,
    directions: Vec<String>,
    /// Entrance distribution per direction; `None` where the room cannot be
    /// entered through that direction.
    entrances: Vec<Option<SparseDist>>,
    /// Exit states per direction, sorted and deduplicated; possibly empty
    /// where the room cannot be exited through that direction.
    exits: Vec<Vec<StateId>>,
    /// First-wins map state -> exit direction, derived from `exits`.
    exit_of: Vec<Option<DirectionId>>,
    bad: Vec<bool>,
    reset: StateId,
}

impl Room {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<(StateId, ActionId, SparseDist)>,
        directions: Vec<String>,
        entrances: Vec<(DirectionId, SparseDist)>,
        exits: Vec<(DirectionId, Vec<StateId>)>,
        bad: Vec<StateId>,
        reset: StateId,
    ) -> Result<Self, ModelError> {
        let invalid = |detail: String| ModelError::InvalidModel { detail };
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("room needs at least one state and one action".into()));
        }
        if directions.is_empty() {
            return Err(invalid("room has no directions".into()));
        }
        for (i, d) in directions.iter().enumerate() {
            if directions[..i].contains(d) {
                return Err(invalid(format!("duplicate direction name {d}")));
            }
        }

        let mut rows: Vec<Vec<(ActionId, SparseDist)>> = vec![Vec::new(); n_states];
        for (s, a, dist) in transitions {
            if s >= n_states {
                return Err(invalid(format!("row source {s} out of range (|S| = {n_states})")));
            }
            if a >= n_actions {
                return Err(invalid(format!("action {a} at state {s} out of range (|A| = {n_actions})")));
            }
            if dist.max_index() >= n_states {
                return Err(invalid(format!(
                    "row ({s}, {a}) reaches state {} out of range (|S| = {n_states})",
                    dist.max_index()
                )));
            }
            if rows[s].iter().any(|(b, _)| *b == a) {
                return Err(invalid(format!("duplicate row for state {s}, action {a}")));
            }
            rows[s].push((a, dist));
        }
        for (s, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(invalid(format!("state {s} has no enabled action")));
            }
            row.sort_by_key(|(a, _)| *a);
        }

        let n_dirs = directions.len();
        let mut entrance_table: Vec<Option<SparseDist>> = vec![None; n_dirs];
        for (d, dist) in entrances {
            if d >= n_dirs {
                return Err(invalid(format!("entrance direction {d} out of range (|D| = {n_dirs})")));
            }
            if dist.max_index() >= n_states {
                return Err(invalid(format!(
                    "entrance for direction {} reaches state {} out of range",
                    directions[d],
                    dist.max_index()
                )));
            }
            if entrance_table[d].is_some() {
                return Err(invalid(format!("duplicate entrance for direction {}", directions[d])));
            }
            entrance_table[d] = Some(dist);
        }

        let mut exit_table: Vec<Vec<StateId>> = vec![Vec::new(); n_dirs];
        let mut seen_exit_dir = vec![false; n_dirs];
        for (d, mut states) in exits {
            if d >= n_dirs {
                return Err(invalid(format!("exit direction {d} out of range (|D| = {n_dirs})")));
            }
            if seen_exit_dir[d] {
                return Err(invalid(format!("duplicate exit set for direction {}", directions[d])));
            }
            seen_exit_dir[d] = true;
            states.sort_unstable();
            states.dedup();
            if let Some(&s) = states.last() {
                if s >= n_states {
                    return Err(invalid(format!("exit state {s} out of range (|S| = {n_states})")));
                }
            }
            exit_table[d] = states;
        }

        let mut exit_of = vec![None; n_states];
        for (d, states) in exit_table.iter().enumerate() {
            for &s in states {
                if exit_of[s].is_none() {
                    exit_of[s] = Some(d);
                }
            }
        }

        let mut bad_mask = vec![false; n_states];
        for s in bad {
            if s >= n_states {
                return Err(invalid(format!("bad state {s} out of range (|S| = {n_states})")));
            }
            bad_mask[s] = true;
        }
        if reset >= n_states {
            return Err(invalid(format!("reset state {reset} out of range (|S| = {n_states})")));
        }

        Ok(Room {
            n_states,
            n_actions,
            rows,
            directions,
            entrances: entrance_table,
            exits: exit_table,
            exit_of,
            bad: bad_mask,
            reset,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn direction_name(&self, d: DirectionId) -> &str {
        &self.directions[d]
    }

    pub fn direction_names(&self) -> &[String] {
        &self.directions
    }

    pub fn direction_index(&self, name: &str) -> Option<DirectionId> {
        self.directions.iter().position(|d| d == name)
    }

    /// `(action, row)` pairs enabled at `s`, sorted by action.
    pub fn enabled_rows(&self, s: StateId) -> &[(ActionId, SparseDist)] {
        &self.rows[s]
    }

    pub fn row(&self, s: StateId, a: ActionId) -> Option<&SparseDist> {
        self.rows[s]
            .binary_search_by_key(&a, |(b, _)| *b)
            .ok()
            .map(|i| &self.rows[s][i].1)
    }

    pub fn entrance(&self, d: DirectionId) -> Option<&SparseDist> {
        self.entrances[d].as_ref()
    }

    /// Exit states for direction `d`, sorted ascending.
    pub fn exit_states(&self, d: DirectionId) -> &[StateId] {
        &self.exits[d]
    }

    /// The direction `s` exits through, if any (first direction wins when a
    /// malformed room lists a state twice; validation reports the overlap).
    pub fn exit_direction_of(&self, s: StateId) -> Option<DirectionId> {
        self.exit_of[s]
    }

    pub fn is_exit(&self, s: StateId) -> bool {
        self.exit_of[s].is_some()
    }

    pub fn is_bad(&self, s: StateId) -> bool {
        self.bad[s]
    }

    /// The raw room dynamics as a standalone MDP with the given initial
    /// distribution. Entrances, exits, bad states, and the reset are not
    /// encoded — callers express them through objectives.
    pub fn to_mdp(&self, initial: SparseDist) -> Result<mdp_core::Mdp, mdp_core::MdpError> {
        let mut transitions = Vec::new();
        for s in 0..self.n_states {
            for (a, dist) in &self.rows[s] {
                transitions.push((s, *a, dist.clone()));
            }
        }
        mdp_core::Mdp::new(self.n_states, self.n_actions, transitions, initial)
    }

    pub fn bad_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.bad
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(s, _)| s)
    }

    pub fn reset(&self) -> StateId {
        self.reset
    }

    /// First semantic violation of the room invariants, if any; `room_name`
    /// is only used to label the error.
    pub(crate) fn first_violation(&self, room_name: &str) -> Option<ModelError> {
        for d1 in 0..self.exits.len() {
            for d2 in (d1 + 1)..self.exits.len() {
                if let Some(s) = first_common(&self.exits[d1], &self.exits[d2]) {
                    return Some(ModelError::ExitOverlap {
                        room: room_name.to_string(),
                        state: s,
                        first: self.directions[d1].clone(),
                        second: self.directions[d2].clone(),
                    });
                }
            }
        }
        for (d, states) in self.exits.iter().enumerate() {
            if states.binary_search(&self.reset).is_ok() {
                return Some(ModelError::ResetInExitSet {
                    room: room_name.to_string(),
                    state: self.reset,
                    direction: self.directions[d].clone(),
                });
            }
        }
        for (d, entrance) in self.entrances.iter().enumerate() {
            if let Some(dist) = entrance {
                let sum: f64 = dist.entries().iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > tolerances::ROW_SUM {
                    return Some(ModelError::EntranceNotNormalized {
                        room: room_name.to_string(),
                        direction: self.directions[d].clone(),
                        sum,
                    });
                }
            }
        }
        None
    }
}

/// Smallest element two sorted slices share.
fn first_common(a: &[StateId], b: &[StateId]) -> Option<StateId> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return Some(a[i]),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirs(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    /// 3-state room: 0 interior, 1 exit east, 2 reset; one action.
    fn small_room() -> Room {
        Room::new(
            3,
            1,
            vec![
                (0, 0, SparseDist::dirac(1)),
                (1, 0, SparseDist::dirac(1)),
                (2, 0, SparseDist::dirac(0)),
            ],
            dirs(&["east", "west"]),
            vec![(1, SparseDist::dirac(0))],
            vec![(0, vec![1])],
            vec![],
            2,
        )
        .unwrap()
    }

    #[test]
    fn accessors_reflect_construction() {
        let r = small_room();
        assert_eq!(r.n_states(), 3);
        assert_eq!(r.direction_index("west"), Some(1));
        assert_eq!(r.exit_direction_of(1), Some(0));
        assert!(!r.is_exit(0));
        assert_eq!(r.exit_states(0), &[1]);
        assert!(r.entrance(0).is_none());
        assert!(r.entrance(1).is_some());
        assert_eq!(r.reset(), 2);
        assert_eq!(r.row(2, 0).unwrap().prob(0), 1.0);
        assert!(r.row(0, 1).is_none());
    }

    #[test]
    fn rejects_state_without_actions() {
        let err = Room::new(
            2,
            1,
            vec![(0, 0, SparseDist::dirac(1))],
            dirs(&["d"]),
            vec![],
            vec![],
            vec![],
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("state 1"));
    }

    #[test]
    fn rejects_duplicate_row() {
        let err = Room::new(
            1,
            2,
            vec![(0, 0, SparseDist::dirac(0)), (0, 0, SparseDist::dirac(0))],
            dirs(&["d"]),
            vec![],
            vec![],
            vec![],
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate row"));
    }

    #[test]
    fn rejects_out_of_range_destination() {
        let err = Room::new(
            1,
            1,
            vec![(0, 0, SparseDist::dirac(7))],
            dirs(&["d"]),
            vec![],
            vec![],
            vec![],
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn reports_exit_overlap_with_names() {
        let r = Room::new(
            3,
            1,
            vec![
                (0, 0, SparseDist::dirac(0)),
                (1, 0, SparseDist::dirac(0)),
                (2, 0, SparseDist::dirac(0)),
            ],
            dirs(&["east", "west"]),
            vec![],
            vec![(0, vec![1]), (1, vec![1, 2])],
            vec![],
            0,
        )
        .unwrap();
        match r.first_violation("lab").unwrap() {
            ModelError::ExitOverlap {
                room,
                state,
                first,
                second,
            } => {
                assert_eq!(room, "lab");
                assert_eq!(state, 1);
                assert_eq!((first.as_str(), second.as_str()), ("east", "west"));
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn reports_reset_in_exit_set() {
        let r = Room::new(
            2,
            1,
            vec![(0, 0, SparseDist::dirac(0)), (1, 0, SparseDist::dirac(0))],
            dirs(&["east"]),
            vec![],
            vec![(0, vec![1])],
            vec![],
            1,
        )
        .unwrap();
        assert!(matches!(
            r.first_violation("lab"),
            Some(ModelError::ResetInExitSet { state: 1, .. })
        ));
    }

    #[test]
    fn clean_room_has_no_violation() {
        assert!(small_room().first_violation("lab").is_none());
    }
}
